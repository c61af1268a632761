//! Seeded synthetic network generators.

use rand::Rng;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::seeded_rng;

const REWIRE_ATTEMPTS: usize = 100;

/// Watts–Strogatz small-world graph: a ring lattice where each node
/// connects to its `k` nearest ring neighbors, with each lattice edge
/// independently rewired with probability `p` to a uniform target
/// (self-loops and duplicates rejected). Rewiring preserves the edge
/// count `n*k/2` exactly; all weights are 1.0.
///
/// Same seed, same graph, bit for bit.
pub fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Result<WeightedGraph> {
    if k == 0 || k % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "watts_strogatz requires even k >= 2, got {k}"
        )));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "watts_strogatz requires k < n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "rewiring probability must be in [0, 1], got {p}"
        )));
    }

    let mut rng = seeded_rng(seed);
    let norm = |a: usize, b: usize| (a.min(b) as u64, a.max(b) as u64);

    let mut present: HashSet<(u64, u64)> = HashSet::with_capacity(n * k / 2);
    for u in 0..n {
        for d in 1..=k / 2 {
            present.insert(norm(u, (u + d) % n));
        }
    }

    // Rewire ring distance by ring distance, node by node, so the RNG
    // stream is a fixed function of (n, k, p, seed).
    let mut edges: Vec<(u64, u64, f64)> = Vec::with_capacity(n * k / 2);
    for d in 1..=k / 2 {
        for u in 0..n {
            let original = norm(u, (u + d) % n);
            if !present.contains(&original) {
                // already replaced while rewiring an earlier edge of u? not
                // possible: each lattice edge is visited exactly once and
                // replacements are always non-lattice pairs or checked below
                continue;
            }
            if p > 0.0 && rng.gen::<f64>() < p {
                let mut replaced = false;
                for _ in 0..REWIRE_ATTEMPTS {
                    let w = rng.gen_range(0..n);
                    let candidate = norm(u, w);
                    if w == u || present.contains(&candidate) {
                        continue;
                    }
                    present.remove(&original);
                    present.insert(candidate);
                    edges.push((candidate.0, candidate.1, 1.0));
                    replaced = true;
                    break;
                }
                if !replaced {
                    edges.push((original.0, original.1, 1.0));
                }
            } else {
                edges.push((original.0, original.1, 1.0));
            }
        }
    }

    WeightedGraph::from_edges(&edges)
}

/// Planted-partition graph: nodes are grouped into blocks of the given
/// sizes; each within-block pair is connected with probability `p_in`,
/// each cross-block pair with probability `p_out`. Unit weights, seeded.
pub fn planted_partition(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(WeightedGraph, Vec<usize>)> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) {
        return Err(Error::InvalidParameter(
            "block probabilities must be in [0, 1]".to_string(),
        ));
    }
    let n: usize = block_sizes.iter().sum();
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat_n(b, size));
    }

    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block_of[i] == block_of[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i as u64, j as u64, 1.0));
            }
        }
    }
    let g = WeightedGraph::from_edges_with_nodes(&edges, n)?;
    Ok((g, block_of))
}
