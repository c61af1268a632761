//! Label propagation with large-cluster constraints.
//!
//! Phase 1 propagates weighted-majority labels while forbidding adoption
//! of labels whose clusters exceed the threshold θ; phase 2 resets all
//! nodes currently holding large labels and re-propagates among them.

use rand::seq::SliceRandom;
use std::collections::{HashMap, HashSet};

use crate::clustering::Partition;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::seeded_rng;

pub fn lpa_constrained(
    g: &WeightedGraph,
    theta: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Partition> {
    if theta == 0 {
        return Err(Error::InvalidParameter("theta must be >= 1".to_string()));
    }
    let n = g.n();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(seed);

    let large_labels = |labels: &[usize]| -> HashSet<usize> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &l in labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .filter(|&(_, c)| c > theta)
            .map(|(l, _)| l)
            .collect()
    };

    // Phase 1: propagation with large-cluster filtering.
    let mut large = HashSet::new();
    let all: Vec<usize> = (0..n).collect();
    propagate(g, &mut labels, &all, &mut large, &large_labels, max_iters, &mut rng);

    // Phase 2: reset nodes holding large labels and re-propagate among them.
    let members: Vec<usize> = (0..n).filter(|&i| large.contains(&labels[i])).collect();
    if !members.is_empty() {
        for &i in &members {
            labels[i] = i;
        }
        let member_set: HashSet<usize> = members.iter().copied().collect();
        let mut large2 = large_labels(&labels);
        propagate_restricted(
            g,
            &mut labels,
            &members,
            &member_set,
            &mut large2,
            &large_labels,
            max_iters,
            &mut rng,
        );
    }

    Partition::new(g, labels.iter().map(|&l| l as u64).collect())
        .map(|p| p.renumbered_by_size(g))
}

fn propagate(
    g: &WeightedGraph,
    labels: &mut [usize],
    nodes: &[usize],
    large: &mut HashSet<usize>,
    recompute_large: &impl Fn(&[usize]) -> HashSet<usize>,
    max_iters: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) {
    let mut order = nodes.to_vec();
    for _ in 0..max_iters {
        order.shuffle(rng);
        let mut changed = false;
        for &i in &order {
            if large.contains(&labels[i]) {
                continue;
            }
            if let Some(best) = majority_label(g, labels, i, large, None) {
                if best != labels[i] {
                    labels[i] = best;
                    changed = true;
                }
            }
        }
        *large = recompute_large(labels);
        if !changed {
            break;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn propagate_restricted(
    g: &WeightedGraph,
    labels: &mut [usize],
    nodes: &[usize],
    universe: &HashSet<usize>,
    large: &mut HashSet<usize>,
    recompute_large: &impl Fn(&[usize]) -> HashSet<usize>,
    max_iters: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) {
    let mut order = nodes.to_vec();
    for _ in 0..max_iters {
        order.shuffle(rng);
        let mut changed = false;
        for &i in &order {
            if large.contains(&labels[i]) {
                continue;
            }
            if let Some(best) = majority_label(g, labels, i, large, Some(universe)) {
                if best != labels[i] {
                    labels[i] = best;
                    changed = true;
                }
            }
        }
        *large = recompute_large(labels);
        if !changed {
            break;
        }
    }
}

/// Weighted-majority neighbor label, excluding labels in the large set;
/// ties go to the smallest label id.
fn majority_label(
    g: &WeightedGraph,
    labels: &[usize],
    i: usize,
    large: &HashSet<usize>,
    universe: Option<&HashSet<usize>>,
) -> Option<usize> {
    let mut weight_of: HashMap<usize, f64> = HashMap::new();
    for (j, w) in g.neighbors(i) {
        if let Some(u) = universe {
            if !u.contains(&j) {
                continue;
            }
        }
        let l = labels[j];
        if large.contains(&l) {
            continue;
        }
        *weight_of.entry(l).or_insert(0.0) += w;
    }
    weight_of
        .into_iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(l, _)| l)
}
