//! Edge-list text I/O.
//!
//! Format: whitespace-separated fields, UTF-8, `#`-prefixed comment lines
//! and blank lines ignored. Plain edge lists are `src dst [weight]`
//! (weight defaults to 1.0); behavior files are `src dst behavior_id strength`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{BehaviorWeights, WeightedGraph};

/// Load a plain edge list. Duplicate entries are summed; with
/// `directed_input` the file is declared to contain directed strengths,
/// which are likewise summed into one undirected weight per pair.
pub fn load_edge_list(path: &Path, directed_input: bool) -> Result<WeightedGraph> {
    let _ = directed_input; // both modes symmetrize by summation
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected `src dst [weight]`, got {} fields", fields.len()),
            ));
        }
        let src = parse_node(path, lineno, fields[0])?;
        let dst = parse_node(path, lineno, fields[1])?;
        if src == dst {
            return Err(Error::parse(path, lineno, format!("self-loop on node {src}")));
        }
        let weight = if fields.len() == 3 {
            parse_weight(path, lineno, fields[2])?
        } else {
            1.0
        };
        if weight < 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("negative weight {weight}"),
            ));
        }
        edges.push((src, dst, weight));
    }
    WeightedGraph::from_edges(&edges)
}

/// Build a graph from a multi-behavior interaction file, aggregating
/// per-behavior strengths as `W_ij = Σ_d ω_d · s^(d)_ij`.
pub fn build_multi_behavior(path: &Path, weights: &BehaviorWeights) -> Result<WeightedGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "expected `src dst behavior_id strength`, got {} fields",
                    fields.len()
                ),
            ));
        }
        let src = parse_node(path, lineno, fields[0])?;
        let dst = parse_node(path, lineno, fields[1])?;
        if src == dst {
            return Err(Error::parse(path, lineno, format!("self-loop on node {src}")));
        }
        let behavior: u32 = fields[2].parse().map_err(|_| {
            Error::parse(path, lineno, format!("invalid behavior id `{}`", fields[2]))
        })?;
        let strength = parse_weight(path, lineno, fields[3])?;
        if strength < 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("negative strength {strength}"),
            ));
        }
        let omega = weights.weight_of(behavior).ok_or_else(|| {
            Error::parse(path, lineno, format!("unknown behavior id {behavior}"))
        })?;
        edges.push((src, dst, omega * strength));
    }
    WeightedGraph::from_edges(&edges)
}

/// Write the canonical edge list: one line `min(i,j) max(i,j) weight` per
/// edge, sorted; round-trips through [`load_edge_list`] to an equal graph.
pub fn write_edge_list(g: &WeightedGraph, path: &Path) -> Result<()> {
    write_edge_list_with_header(g, &[], path)
}

/// [`write_edge_list`] with `# key=value` provenance comments up front.
pub fn write_edge_list_with_header(
    g: &WeightedGraph,
    header: &[(String, String)],
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for (key, value) in header {
            writeln!(out, "# {key}={value}")?;
        }
        for (i, j, w) in g.edges() {
            // internal order follows external ids, so this is sorted
            writeln!(out, "{} {} {}", g.node_id(i), g.node_id(j), w)?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

fn parse_node(path: &Path, lineno: usize, s: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| Error::parse(path, lineno, format!("invalid node id `{s}`")))
}

fn parse_weight(path: &Path, lineno: usize, s: &str) -> Result<f64> {
    let w: f64 = s
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("invalid weight `{s}`")))?;
    if !w.is_finite() {
        return Err(Error::parse(path, lineno, format!("non-finite weight `{s}`")));
    }
    Ok(w)
}
