//! Weighted undirected interaction graphs.
//!
//! Nodes carry arbitrary 64-bit external ids, mapped to dense internal
//! indices at construction. Graphs are immutable after construction and
//! safe to share across threads.

mod generate;
mod io;

pub use generate::{planted_partition, watts_strogatz};
pub use io::{build_multi_behavior, load_edge_list, write_edge_list, write_edge_list_with_header};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Undirected weighted graph in CSR form.
///
/// Invariants: adjacency is symmetric, weights are strictly positive,
/// there are no self-loops, and `sum(degrees) == 2 * total_edge_weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_ids: Vec<u64>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    total_edge_weight: f64,
}

impl WeightedGraph {
    /// Build from an undirected edge list. Duplicate `(i, j)` entries (in
    /// either orientation) are summed into a single edge; zero-weight
    /// results are dropped.
    pub fn from_edges(edges: &[(u64, u64, f64)]) -> Result<Self> {
        Self::build(edges, std::iter::empty())
    }

    /// Like [`WeightedGraph::from_edges`] but guarantees the node set
    /// includes `0..n` even when some of those nodes have no edges.
    pub fn from_edges_with_nodes(edges: &[(u64, u64, f64)], n: usize) -> Result<Self> {
        Self::build(edges, 0..n as u64)
    }

    fn build(edges: &[(u64, u64, f64)], extra_nodes: impl Iterator<Item = u64>) -> Result<Self> {
        for &(src, dst, w) in edges {
            if src == dst {
                return Err(Error::InvalidParameter(format!(
                    "self-loop on node {src} is not allowed"
                )));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge ({src}, {dst}) has invalid weight {w}"
                )));
            }
        }

        // BTreeMap keys give deterministic node ordering by external id.
        let mut acc: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        let mut ids: BTreeMap<u64, ()> = BTreeMap::new();
        for id in extra_nodes {
            ids.insert(id, ());
        }
        for &(src, dst, w) in edges {
            ids.insert(src, ());
            ids.insert(dst, ());
            let key = (src.min(dst), src.max(dst));
            *acc.entry(key).or_insert(0.0) += w;
        }

        let node_ids: Vec<u64> = ids.into_keys().collect();
        let index: BTreeMap<u64, u32> = node_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();

        let n = node_ids.len();
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut total = 0.0;
        for ((a, b), w) in acc {
            if w == 0.0 {
                continue;
            }
            let (ia, ib) = (index[&a], index[&b]);
            adj[ia as usize].push((ib, w));
            adj[ib as usize].push((ia, w));
            total += w;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        offsets.push(0);
        for row in &mut adj {
            row.sort_unstable_by_key(|&(j, _)| j);
            degrees.push(row.iter().map(|&(_, w)| w).sum());
            for &(j, w) in row.iter() {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }

        Ok(WeightedGraph {
            node_ids,
            offsets,
            neighbors,
            weights,
            degrees,
            total_edge_weight: total,
        })
    }

    /// Empty graph.
    pub fn empty() -> Self {
        WeightedGraph {
            node_ids: Vec::new(),
            offsets: vec![0],
            neighbors: Vec::new(),
            weights: Vec::new(),
            degrees: Vec::new(),
            total_edge_weight: 0.0,
        }
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Total edge weight m = Σ w_ij / 2.
    pub fn m(&self) -> f64 {
        self.total_edge_weight
    }

    /// Weighted degree k_i of internal node `i`.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Mean weighted degree 2m / n.
    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.total_edge_weight / self.n() as f64
        }
    }

    /// Neighbors of internal node `i` as `(internal index, weight)` pairs.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.offsets[i];
        let hi = self.offsets[i + 1];
        self.neighbors[lo..hi]
            .iter()
            .zip(&self.weights[lo..hi])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// External node id of internal index `i`.
    pub fn node_id(&self, i: usize) -> u64 {
        self.node_ids[i]
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    /// Internal index of an external node id, if present.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.node_ids.binary_search(&id).ok()
    }

    /// Undirected edge count (number of distinct edges, not weight).
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Iterate distinct undirected edges `(i, j, w)` with `i < j`
    /// (internal indices, ascending).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| i < j)
                .map(move |(j, w)| (i, j, w))
        })
    }
}

/// Per-behavior importance weights for multi-behavior edge aggregation.
#[derive(Debug, Clone)]
pub struct BehaviorWeights {
    entries: Vec<(u32, f64)>,
}

impl BehaviorWeights {
    /// Validates that behavior ids are unique, weights are non-negative,
    /// and at least one weight is positive.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(id, w) in &entries {
            if !seen.insert(id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate behavior id {id}"
                )));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "behavior {id} has invalid weight {w}"
                )));
            }
        }
        if !entries.iter().any(|&(_, w)| w > 0.0) {
            return Err(Error::InvalidParameter(
                "all behavior weights zero".to_string(),
            ));
        }
        Ok(BehaviorWeights { entries })
    }

    pub fn weight_of(&self, behavior: u32) -> Option<f64> {
        self.entries
            .iter()
            .find(|&&(id, _)| id == behavior)
            .map(|&(_, w)| w)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }
}
