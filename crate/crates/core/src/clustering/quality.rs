//! Partition quality metrics and the composite comparison score.

use serde::{Deserialize, Serialize};

use crate::clustering::{modularity, Partition};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Quality summary of a clustering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    /// Modularity Q at the requested resolution.
    pub modularity: f64,
    /// Intra-cluster edge weight over total edge weight, in [0, 1].
    pub intra_edge_ratio: f64,
    /// Population variance of cluster sizes.
    pub size_variance: f64,
    pub max_cluster: usize,
    /// Whether `max_cluster` is within the declared threshold.
    pub ctrl: bool,
    /// Composite score; present when σ_max was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite_score: Option<f64>,
}

/// Compute Q, ρ, size variance, max cluster and the control flag for a
/// partition, with `threshold` as the declared max-cluster bound.
pub fn quality(
    g: &WeightedGraph,
    p: &Partition,
    gamma: f64,
    threshold: usize,
) -> Result<QualityReport> {
    let q = modularity(g, p, gamma)?;
    let mut intra = 0.0;
    for (i, j, w) in g.edges() {
        if p.cluster_of(i) == p.cluster_of(j) {
            intra += w;
        }
    }
    let rho = intra / g.m();

    let sizes: Vec<f64> = p.cluster_sizes().values().map(|&s| s as f64).collect();
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    let size_variance = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sizes.len() as f64;
    let max_cluster = p.max_cluster_size();

    Ok(QualityReport {
        modularity: q,
        intra_edge_ratio: rho,
        size_variance,
        max_cluster,
        ctrl: max_cluster <= threshold,
        composite_score: None,
    })
}

/// Composite comparison score
/// `0.2·Q + 0.3·ρ + 0.3·Bal + 0.2·[ctrl]` with `Bal = 1 − σ/σ_max`,
/// where σ and σ_max are size *variances* and σ_max is the largest
/// variance among the methods being compared. Bal clamps at 0 when the
/// variance exceeds σ_max.
pub fn composite_score(
    q: f64,
    rho: f64,
    variance: f64,
    sigma_max: f64,
    ctrl: bool,
) -> Result<f64> {
    if sigma_max <= 0.0 || !sigma_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma_max must be > 0, got {sigma_max}"
        )));
    }
    let bal = (1.0 - variance / sigma_max).max(0.0);
    Ok(0.2 * q + 0.3 * rho + 0.3 * bal + 0.2 * if ctrl { 1.0 } else { 0.0 })
}
