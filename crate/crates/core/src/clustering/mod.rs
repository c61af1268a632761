//! Graph clustering for randomization units: Balanced Louvain with a soft
//! size penalty and a connectivity-based hard split, plus standard Louvain
//! and constrained label propagation as baselines, and partition quality
//! metrics.

mod lpa;
mod louvain;
mod quality;

pub use lpa::lpa_constrained;
pub use louvain::{
    balanced_louvain, balanced_louvain_traced, hard_split, louvain, modularity, modularity_gain,
    size_penalty, LouvainTrace, TraceLevel,
};
pub use quality::{composite_score, quality, QualityReport};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Configuration for [`balanced_louvain`].
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LouvainConfig {
    /// Size balance factor α ≥ 0; 0 disables the soft penalty.
    pub alpha: f64,
    /// Maximum cluster size N_max. Negative magnitude disables the hard
    /// post-processing split while still deriving the penalty threshold
    /// τ = |N_max| / 2 for the soft constraint.
    pub n_max: i64,
    /// Resolution γ > 0.
    pub gamma: f64,
    pub seed: u64,
    pub max_passes: usize,
    pub min_gain: f64,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            alpha: 0.0,
            n_max: -1,
            gamma: 1.0,
            seed: 0,
            max_passes: 50,
            min_gain: 1e-9,
        }
    }
}

impl LouvainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidParameter(
                "n_max must be nonzero (negative disables the hard split)".to_string(),
            ));
        }
        Ok(())
    }

    /// Penalty threshold τ = ⌊|N_max| / 2⌋, clamped to at least 1.
    pub fn tau(&self) -> u64 {
        (self.n_max.unsigned_abs() / 2).max(1)
    }
}

/// A disjoint clustering of a graph's nodes.
///
/// `cluster_of[i]` is the cluster id of internal node `i`. Ids are
/// arbitrary u64s; algorithm outputs use dense ids `0..k`, while
/// perturbation introduces ids in a reserved high-bit namespace.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    cluster_of: Vec<u64>,
    sizes: BTreeMap<u64, usize>,
    degree_totals: BTreeMap<u64, f64>,
}

impl Partition {
    /// Build from per-node assignments, computing per-cluster aggregates.
    pub fn new(g: &WeightedGraph, cluster_of: Vec<u64>) -> Result<Self> {
        if cluster_of.len() != g.n() {
            return Err(Error::InvalidParameter(format!(
                "partition covers {} nodes but graph has {}",
                cluster_of.len(),
                g.n()
            )));
        }
        let mut sizes = BTreeMap::new();
        let mut degree_totals = BTreeMap::new();
        for (i, &c) in cluster_of.iter().enumerate() {
            *sizes.entry(c).or_insert(0usize) += 1;
            *degree_totals.entry(c).or_insert(0.0) += g.degree(i);
        }
        Ok(Partition {
            cluster_of,
            sizes,
            degree_totals,
        })
    }

    /// Singleton partition: every node its own cluster, ids `0..n`.
    pub fn singletons(g: &WeightedGraph) -> Self {
        Partition::new(g, (0..g.n() as u64).collect()).expect("lengths match")
    }

    pub fn cluster_of(&self, i: usize) -> u64 {
        self.cluster_of[i]
    }

    pub fn assignments(&self) -> &[u64] {
        &self.cluster_of
    }

    pub fn n(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    /// Cluster id → number of nodes.
    pub fn cluster_sizes(&self) -> &BTreeMap<u64, usize> {
        &self.sizes
    }

    /// Cluster id → Σ_tot (sum of weighted degrees).
    pub fn cluster_degree_totals(&self) -> &BTreeMap<u64, f64> {
        &self.degree_totals
    }

    pub fn max_cluster_size(&self) -> usize {
        self.sizes.values().copied().max().unwrap_or(0)
    }

    /// Members of each cluster, keyed by cluster id.
    pub fn clusters(&self) -> BTreeMap<u64, Vec<usize>> {
        let mut map: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &c) in self.cluster_of.iter().enumerate() {
            map.entry(c).or_default().push(i);
        }
        map
    }

    /// Relabel clusters densely `0..k`, ordered by descending size with
    /// ties broken by smallest member external id.
    pub fn renumbered_by_size(&self, g: &WeightedGraph) -> Partition {
        let clusters = self.clusters();
        let mut order: Vec<(usize, u64, u64)> = clusters
            .iter()
            .map(|(&c, members)| {
                let min_ext = members.iter().map(|&i| g.node_id(i)).min().unwrap_or(0);
                (members.len(), min_ext, c)
            })
            .collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let relabel: BTreeMap<u64, u64> = order
            .iter()
            .enumerate()
            .map(|(new, &(_, _, old))| (old, new as u64))
            .collect();
        let cluster_of = self.cluster_of.iter().map(|c| relabel[c]).collect();
        Partition::new(g, cluster_of).expect("same length")
    }
}

/// Write a partition as `node_id<TAB>cluster_id` lines sorted by node id,
/// preceded by `# key=value` header comments for provenance.
pub fn write_partition(
    g: &WeightedGraph,
    p: &Partition,
    header: &[(String, String)],
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for (key, value) in header {
            writeln!(out, "# {key}={value}")?;
        }
        for i in 0..g.n() {
            writeln!(out, "{}\t{}", g.node_id(i), p.cluster_of(i))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Read the raw `(node id, cluster id)` pairs of a partition file, in
/// file order, without requiring the graph.
pub fn load_partition_pairs(path: &Path) -> Result<Vec<(u64, u64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(node), Some(cluster), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(path, lineno, "expected `node_id<TAB>cluster_id`"));
        };
        let node: u64 = node
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid node id `{node}`")))?;
        let cluster: u64 = cluster
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid cluster id `{cluster}`")))?;
        if !seen.insert(node) {
            return Err(Error::parse(
                path,
                lineno,
                format!("node {node} assigned more than once"),
            ));
        }
        pairs.push((node, cluster));
    }
    Ok(pairs)
}

/// Load a partition written by [`write_partition`]; every graph node must
/// appear exactly once.
pub fn load_partition(g: &WeightedGraph, path: &Path) -> Result<Partition> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cluster_of = vec![None; g.n()];
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(node), Some(cluster), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(path, lineno, "expected `node_id<TAB>cluster_id`"));
        };
        let node: u64 = node
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid node id `{node}`")))?;
        let cluster: u64 = cluster
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("invalid cluster id `{cluster}`")))?;
        let idx = g.index_of(node).ok_or_else(|| {
            Error::parse(path, lineno, format!("node {node} not present in graph"))
        })?;
        if cluster_of[idx].replace(cluster).is_some() {
            return Err(Error::parse(
                path,
                lineno,
                format!("node {node} assigned more than once"),
            ));
        }
    }
    let cluster_of: Option<Vec<u64>> = cluster_of.into_iter().collect();
    let cluster_of = cluster_of.ok_or_else(|| {
        Error::InvalidParameter("partition file does not cover every graph node".to_string())
    })?;
    Partition::new(g, cluster_of)
}
