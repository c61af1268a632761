//! Balanced Louvain: modularity-driven local moving with a piecewise size
//! penalty, standard graph contraction between passes, and an optional
//! connectivity-based hard split of oversized clusters afterwards.

use rand::seq::SliceRandom;

use crate::clustering::{LouvainConfig, Partition};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::seeded_rng;

const MAX_SWEEPS_PER_PASS: usize = 64;

/// Modularity of a partition:
/// Q = (1/2m) Σ_{i,j} [w_ij − γ k_i k_j / 2m] δ(c_i, c_j),
/// summed over ordered pairs, computed per cluster in O(m + #clusters).
pub fn modularity(g: &WeightedGraph, p: &Partition, gamma: f64) -> Result<f64> {
    if g.m() <= 0.0 {
        return Err(Error::ModularityUndefined);
    }
    let two_m = 2.0 * g.m();
    let mut intra_ordered = 0.0;
    for i in 0..g.n() {
        let ci = p.cluster_of(i);
        for (j, w) in g.neighbors(i) {
            if p.cluster_of(j) == ci {
                intra_ordered += w;
            }
        }
    }
    let null: f64 = p
        .cluster_degree_totals()
        .values()
        .map(|&tot| (tot / two_m) * (tot / two_m))
        .sum();
    Ok(intra_ordered / two_m - gamma * null)
}

/// Gain score for attaching a detached node to a cluster:
/// ΔQ = k_in − γ k_i Σ_tot / 2m, with Σ_tot excluding the node itself.
/// Proportional to the true modularity change (the shared
/// 1/2m scale and the node's self-term cancel when comparing candidates).
#[inline]
pub fn modularity_gain(k_in: f64, k_i: f64, sigma_tot: f64, two_m: f64, gamma: f64) -> f64 {
    k_in - gamma * k_i * sigma_tot / two_m
}

/// Piecewise size penalty: zero up to the threshold τ, then growing
/// linearly at the mean-degree scale so that α is interpretable as a
/// fraction of a typical modularity gain.
#[inline]
pub fn size_penalty(cluster_size: u64, tau: u64, k_bar: f64) -> f64 {
    if cluster_size <= tau {
        0.0
    } else {
        k_bar * (cluster_size - tau) as f64 / tau as f64
    }
}

/// How much detail [`balanced_louvain_traced`] records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLevel {
    /// Incremental modularity and assignments at each pass boundary.
    Passes,
    /// Additionally snapshot after every accepted move (small graphs only).
    Moves,
}

/// Optimization trace for diagnostics and cross-checking.
#[derive(Debug, Clone, Default)]
pub struct LouvainTrace {
    /// Incrementally tracked modularity after each pass (γ from config).
    pub pass_modularity: Vec<f64>,
    /// Original-node assignments at the same boundaries.
    pub pass_assignments: Vec<Vec<u64>>,
    /// Per accepted move, with [`TraceLevel::Moves`]: (incremental Q,
    /// assignment snapshot).
    pub move_snapshots: Vec<(f64, Vec<u64>)>,
    pub passes: usize,
}

/// Standard Louvain: the α = 0, no-split path of [`balanced_louvain`].
pub fn louvain(g: &WeightedGraph, gamma: f64, seed: u64) -> Result<Partition> {
    balanced_louvain(
        g,
        &LouvainConfig {
            alpha: 0.0,
            n_max: -1,
            gamma,
            seed,
            ..Default::default()
        },
    )
}

/// Balanced Louvain per the soft-penalty score S = ΔQ − α·P(|C|), with
/// contraction between passes and, for positive `n_max`, the hard split
/// applied after convergence. Cluster ids in the result are dense
/// `0..k`, ordered by descending size. Same seed, same output.
pub fn balanced_louvain(g: &WeightedGraph, cfg: &LouvainConfig) -> Result<Partition> {
    run(g, cfg, None).map(|(p, _)| p)
}

/// [`balanced_louvain`] with an optimization trace attached.
pub fn balanced_louvain_traced(
    g: &WeightedGraph,
    cfg: &LouvainConfig,
    level: TraceLevel,
) -> Result<(Partition, LouvainTrace)> {
    run(g, cfg, Some(level)).map(|(p, t)| (p, t.unwrap_or_default()))
}

// Contracted working graph. Self-loops (carrying twice the internal edge
// weight of a super-node) are stored apart from the neighbor lists so
// k_in gathering never sees them; degrees include them once.
struct WorkGraph {
    adj: Vec<Vec<(u32, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
    node_count: Vec<u64>,
}

impl WorkGraph {
    fn level_zero(g: &WeightedGraph) -> Self {
        let n = g.n();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            adj[i] = g.neighbors(i).map(|(j, w)| (j as u32, w)).collect();
        }
        WorkGraph {
            adj,
            self_loop: vec![0.0; n],
            degree: g.degrees().to_vec(),
            node_count: vec![1; n],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn contract(&self, comm: &[usize]) -> (WorkGraph, Vec<usize>) {
        // dense relabel in ascending old community index
        let mut relabel = vec![usize::MAX; self.len()];
        let mut next = 0;
        for &c in comm {
            if relabel[c] == usize::MAX {
                relabel[c] = usize::MAX - 1; // mark seen
            }
        }
        for slot in relabel.iter_mut() {
            if *slot == usize::MAX - 1 {
                *slot = next;
                next += 1;
            }
        }
        let k = next;
        let mut self_loop = vec![0.0; k];
        let mut degree = vec![0.0; k];
        let mut node_count = vec![0u64; k];
        let mut acc: Vec<std::collections::BTreeMap<u32, f64>> = vec![Default::default(); k];
        for i in 0..self.len() {
            let ci = relabel[comm[i]];
            self_loop[ci] += self.self_loop[i];
            degree[ci] += self.degree[i];
            node_count[ci] += self.node_count[i];
            for &(j, w) in &self.adj[i] {
                let cj = relabel[comm[j as usize]];
                if cj == ci {
                    self_loop[ci] += w; // ordered pair, counted from each side
                } else {
                    *acc[ci].entry(cj as u32).or_insert(0.0) += w;
                }
            }
        }
        let adj = acc
            .into_iter()
            .map(|row| row.into_iter().collect())
            .collect();
        let node_map = comm.iter().map(|&c| relabel[c]).collect();
        (
            WorkGraph {
                adj,
                self_loop,
                degree,
                node_count,
            },
            node_map,
        )
    }
}

fn run(
    g: &WeightedGraph,
    cfg: &LouvainConfig,
    trace_level: Option<TraceLevel>,
) -> Result<(Partition, Option<LouvainTrace>)> {
    cfg.validate()?;
    if g.n() == 0 || g.m() == 0.0 {
        // no edges, nothing to optimize: every node stays a singleton
        let p = Partition::singletons(g).renumbered_by_size(g);
        return Ok((p, trace_level.map(|_| LouvainTrace::default())));
    }

    let two_m = 2.0 * g.m();
    let tau = cfg.tau();
    let k_bar = g.mean_degree(); // fixed on the original graph across levels
    let mut rng = seeded_rng(cfg.seed);
    let mut trace = trace_level.map(|_| LouvainTrace::default());

    // membership[v] = index of v's super-node in the current work graph
    let mut membership: Vec<usize> = (0..g.n()).collect();
    let mut work = WorkGraph::level_zero(g);

    // Incremental modularity, starting from the all-singletons value.
    let mut q = -cfg.gamma
        * g.degrees()
            .iter()
            .map(|&k| (k / two_m) * (k / two_m))
            .sum::<f64>();

    let mut passes = 0;
    loop {
        passes += 1;
        let n = work.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut sigma_tot: Vec<f64> = work.degree.clone();
        let mut comm_size: Vec<u64> = work.node_count.clone();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);

        // scratch: per-community incident weight of the current node
        let mut k_in = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();

        let mut moves_this_pass = 0usize;
        let mut gain_this_pass = 0.0;
        let mut moved_in_sweep = true;
        let mut sweeps = 0;
        // With α > 0 the penalty term is not the discrete gradient of any
        // global potential, so positive-gain move cycles are possible;
        // the sweep cap forces termination. α = 0 converges on its own.
        while moved_in_sweep && sweeps < MAX_SWEEPS_PER_PASS {
            sweeps += 1;
            moved_in_sweep = false;
            for &node in &order {
                let c_old = comm[node];
                let k_node = work.degree[node];

                // detach
                sigma_tot[c_old] -= k_node;
                comm_size[c_old] -= work.node_count[node];

                for &(nbr, w) in &work.adj[node] {
                    let c = comm[nbr as usize];
                    if k_in[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    k_in[c] += w;
                }
                if !touched.contains(&c_old) {
                    touched.push(c_old);
                }
                touched.sort_unstable();

                let score = |c: usize| -> f64 {
                    let base =
                        modularity_gain(k_in[c], k_node, sigma_tot[c], two_m, cfg.gamma);
                    base - cfg.alpha * size_penalty(comm_size[c], tau, k_bar)
                };

                // highest S, then smallest cluster size, then smallest id
                let mut best = c_old;
                let mut best_score = score(c_old);
                for &c in &touched {
                    if c == c_old {
                        continue;
                    }
                    let s = score(c);
                    let better = s > best_score
                        || (s == best_score
                            && (comm_size[c] < comm_size[best]
                                || (comm_size[c] == comm_size[best] && c < best)));
                    if better {
                        best = c;
                        best_score = s;
                    }
                }

                let old_score = score(c_old);
                let accept = best != c_old && best_score - old_score > cfg.min_gain;
                let target = if accept { best } else { c_old };
                if accept {
                    moves_this_pass += 1;
                    moved_in_sweep = true;
                    gain_this_pass += best_score - old_score;
                    // penalty terms do not enter Q itself
                    let dq = (modularity_gain(k_in[best], k_node, sigma_tot[best], two_m, cfg.gamma)
                        - modularity_gain(k_in[c_old], k_node, sigma_tot[c_old], two_m, cfg.gamma))
                        / g.m();
                    q += dq;
                }

                comm[node] = target;
                sigma_tot[target] += k_node;
                comm_size[target] += work.node_count[node];

                if accept {
                    if let (Some(t), Some(TraceLevel::Moves)) = (trace.as_mut(), trace_level) {
                        let snapshot = membership
                            .iter()
                            .map(|&m| comm[m] as u64)
                            .collect::<Vec<u64>>();
                        t.move_snapshots.push((q, snapshot));
                    }
                }

                for &c in &touched {
                    k_in[c] = 0.0;
                }
                touched.clear();
            }
        }

        if let Some(t) = trace.as_mut() {
            t.pass_modularity.push(q);
            t.pass_assignments
                .push(membership.iter().map(|&m| comm[m] as u64).collect());
            t.passes = passes;
        }

        if moves_this_pass == 0 {
            break;
        }

        let (contracted, node_map) = work.contract(&comm);
        for m in membership.iter_mut() {
            *m = node_map[*m];
        }
        work = contracted;

        if gain_this_pass < cfg.min_gain || passes >= cfg.max_passes {
            break;
        }
    }

    let assignment: Vec<u64> = membership.iter().map(|&m| m as u64).collect();
    let mut partition = Partition::new(g, assignment)?;
    if cfg.n_max > 0 {
        partition = hard_split(g, &partition, cfg.n_max as usize)?;
    }
    partition = partition.renumbered_by_size(g);
    Ok((partition, trace))
}

/// Split every cluster larger than `n_max` by repeatedly moving its
/// lowest-connectivity members (ties broken by smaller node id) into a
/// fresh cluster until the size bound holds everywhere. Connectivity is
/// computed once per split round.
pub fn hard_split(g: &WeightedGraph, p: &Partition, n_max: usize) -> Result<Partition> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".to_string()));
    }
    let mut cluster_of = p.assignments().to_vec();
    let mut next_id = cluster_of.iter().copied().max().unwrap_or(0) + 1;

    loop {
        let mut clusters: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
        for (i, &c) in cluster_of.iter().enumerate() {
            clusters.entry(c).or_default().push(i);
        }
        let oversized: Vec<(u64, Vec<usize>)> = clusters
            .into_iter()
            .filter(|(_, members)| members.len() > n_max)
            .collect();
        if oversized.is_empty() {
            break;
        }
        for (_cid, members) in oversized {
            let member_set: std::collections::HashSet<usize> = members.iter().copied().collect();
            let mut conn: Vec<(f64, u64, usize)> = members
                .iter()
                .map(|&i| {
                    let c: f64 = g
                        .neighbors(i)
                        .filter(|&(j, _)| j != i && member_set.contains(&j))
                        .map(|(_, w)| w)
                        .sum();
                    (c, g.node_id(i), i)
                })
                .collect();
            conn.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let excess = members.len() - n_max;
            let fresh = next_id;
            next_id += 1;
            for &(_, _, i) in conn.iter().take(excess) {
                cluster_of[i] = fresh;
            }
        }
    }
    Partition::new(g, cluster_of)
}
