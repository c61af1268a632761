//! Spillover simulation study: generate small-world networks, sweep
//! spillover containment via cluster-id perturbation, apply the network
//! outcome model, and fit observed ATE against WGSR.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{louvain, Partition};
use crate::error::{Error, Result};
use crate::experiment::{assign, graph_events, perturb_cids, wgsr, Arm, ShareEventLog};
use crate::graph::{watts_strogatz, WeightedGraph};
use crate::rng::{mix2, seeded_rng};
use crate::stats::t_critical_975;

/// Parameters of the spillover outcome model
/// `Y_i = τ·1[i∈T] + δ·Σ_{j∈N(i)} 1[j∈T]·S_j + ε_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeModelConfig {
    /// Direct treatment effect τ.
    pub tau: f64,
    /// Spillover coefficient δ.
    pub delta: f64,
    /// Sharer probability: S_j ~ Bernoulli(s_prob).
    pub s_prob: f64,
    /// Noise standard deviation: ε_i ~ Normal(0, noise_sd²).
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for OutcomeModelConfig {
    fn default() -> Self {
        OutcomeModelConfig {
            tau: 1.0,
            delta: 0.2,
            s_prob: 0.3,
            noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl OutcomeModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.s_prob) {
            return Err(Error::InvalidParameter(format!(
                "s_prob must be in [0, 1], got {}",
                self.s_prob
            )));
        }
        if self.noise_sd < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise_sd must be >= 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Draw per-node sharer flags S_j ~ Bernoulli(s_prob).
pub fn draw_sharers(n: usize, s_prob: f64, seed: u64) -> Vec<bool> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| rng.gen::<f64>() < s_prob).collect()
}

fn draw_noise(n: usize, sd: f64, seed: u64) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, sd).expect("valid sd");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

fn apply_outcome_model(
    g: &WeightedGraph,
    treated: &[bool],
    sharers: &[bool],
    tau: f64,
    delta: f64,
    noise: &[f64],
) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let spill: f64 = g
                .neighbors(i)
                .filter(|&(j, _)| treated[j] && sharers[j])
                .count() as f64;
            tau * if treated[i] { 1.0 } else { 0.0 } + delta * spill + noise[i]
        })
        .collect()
}

/// Per-node outcomes under an assignment: sharer flags are drawn once per
/// node and noise per node from the config seed.
pub fn outcomes(
    g: &WeightedGraph,
    a: &crate::experiment::Assignment,
    cfg: &OutcomeModelConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if a.n() != g.n() {
        return Err(Error::InvalidParameter(
            "assignment does not cover all graph nodes".to_string(),
        ));
    }
    let treated: Vec<bool> = (0..g.n()).map(|i| a.arm_of_node(i) == Arm::Treatment).collect();
    let sharers = draw_sharers(g.n(), cfg.s_prob, mix2(cfg.seed, 0x5348)); // "SH"
    let noise = draw_noise(g.n(), cfg.noise_sd, mix2(cfg.seed, 0x4550)); // "EP"
    Ok(apply_outcome_model(g, &treated, &sharers, cfg.tau, cfg.delta, &noise))
}

/// Closed-form global average treatment effect of the outcome model:
/// everyone-treated minus everyone-control expectation, τ + δ·k̄·s_prob.
pub fn true_ate(g: &WeightedGraph, cfg: &OutcomeModelConfig) -> f64 {
    cfg.tau + cfg.delta * g.mean_degree() * cfg.s_prob
}

/// Monte-Carlo counterfactual oracle for [`true_ate`]: simulate the
/// everyone-treated and everyone-control worlds with shared draws and
/// average the outcome difference.
pub fn true_ate_monte_carlo(g: &WeightedGraph, cfg: &OutcomeModelConfig, draws: usize) -> f64 {
    let n = g.n();
    let all = vec![true; n];
    let none = vec![false; n];
    let mut total = 0.0;
    for d in 0..draws {
        let sharers = draw_sharers(n, cfg.s_prob, mix2(cfg.seed, 0x4D43 + d as u64));
        let noise = draw_noise(n, cfg.noise_sd, mix2(cfg.seed, 0x4D44 + d as u64));
        let y1 = apply_outcome_model(g, &all, &sharers, cfg.tau, cfg.delta, &noise);
        let y0 = apply_outcome_model(g, &none, &sharers, cfg.tau, cfg.delta, &noise);
        let diff: f64 = y1.iter().zip(&y0).map(|(a, b)| a - b).sum::<f64>() / n as f64;
        total += diff;
    }
    total / draws as f64
}

/// One network in a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub label: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
}

/// Full sweep configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub networks: Vec<NetworkSpec>,
    /// Perturbation ratios, one sweep level each.
    pub r_grid: Vec<f64>,
    pub reps: usize,
    pub buckets: u32,
    pub treat_buckets: Vec<u32>,
    pub ctrl_buckets: Vec<u32>,
    pub gamma: f64,
    pub tau: f64,
    pub delta: f64,
    pub s_prob: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SweepConfig {
    /// The reference study setup: n = 10,000, mean degrees {4, 10, 20},
    /// rewiring 0.1, ten perturbation levels, 30 replications, clusters
    /// hashed into ten buckets split half treatment / half control.
    pub fn paper_preset(seed: u64) -> Self {
        SweepConfig {
            networks: vec![
                NetworkSpec { label: "low".into(), n: 10_000, k: 4, p: 0.1 },
                NetworkSpec { label: "medium".into(), n: 10_000, k: 10, p: 0.1 },
                NetworkSpec { label: "high".into(), n: 10_000, k: 20, p: 0.1 },
            ],
            r_grid: (0..10).map(|i| i as f64 / 9.0).collect(),
            reps: 30,
            buckets: 10,
            treat_buckets: vec![0, 1, 2, 3, 4],
            ctrl_buckets: vec![5, 6, 7, 8, 9],
            gamma: 1.0,
            tau: 1.0,
            delta: 0.2,
            s_prob: 0.3,
            noise_sd: 0.1,
            seed,
        }
    }
}

/// One simulated experiment cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub network: String,
    pub mean_degree: f64,
    pub r: f64,
    pub rep: usize,
    pub wgsr: f64,
    pub ate_obs: f64,
    pub bias: f64,
}

/// Replication summary of one perturbation level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSummary {
    pub r: f64,
    pub wgsr_mean: f64,
    pub ate_mean: f64,
    /// 95% t-interval of the level mean across replications.
    pub ate_ci95: (f64, f64),
    pub valid_cells: usize,
}

/// Per-network line fit of observed ATE on WGSR over level means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFit {
    pub network: String,
    pub mean_degree: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Fitted value at WGSR = 1.
    pub extrapolated_ate: f64,
    pub true_ate: f64,
    /// 1 − |bias at the highest-WGSR level| / |bias at the lowest|.
    pub bias_reduction: f64,
    pub invalid_cells: usize,
    pub levels: Vec<LevelSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellRecord>,
    pub fits: Vec<NetworkFit>,
}

/// Run the full sweep: for each network, cluster once, then for every
/// perturbation level × replication assign arms, simulate outcomes, and
/// record (WGSR, observed ATE, bias). Cells are independent and run in
/// parallel; outputs are merged in deterministic cell order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.reps < 2 {
        return Err(Error::InvalidParameter(
            "at least 2 replications required for CI".to_string(),
        ));
    }
    if cfg.networks.is_empty() {
        return Err(Error::InvalidParameter("no networks configured".to_string()));
    }
    for &r in &cfg.r_grid {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!(
                "perturbation ratio {r} outside [0, 1]"
            )));
        }
    }
    let outcome = OutcomeModelConfig {
        tau: cfg.tau,
        delta: cfg.delta,
        s_prob: cfg.s_prob,
        noise_sd: cfg.noise_sd,
        seed: cfg.seed,
    };
    outcome.validate()?;

    let mut cells = Vec::new();
    let mut fits = Vec::new();

    for (net_idx, net) in cfg.networks.iter().enumerate() {
        let net_seed = mix2(cfg.seed, 0x4E45_5400 + net_idx as u64); // "NET."
        let g = watts_strogatz(net.n, net.k, net.p, mix2(net_seed, 0x47))?;
        let base = louvain(&g, cfg.gamma, mix2(net_seed, 0x4C))?;
        let events = graph_events(&g);
        let truth = true_ate(&g, &outcome);

        let indices: Vec<(usize, usize)> = (0..cfg.r_grid.len())
            .flat_map(|ri| (0..cfg.reps).map(move |rep| (ri, rep)))
            .collect();

        let cell_results: Vec<Option<CellRecord>> = indices
            .par_iter()
            .map(|&(ri, rep)| {
                simulate_cell(
                    &g, &base, &events, net, cfg, &outcome, net_seed, truth, ri, rep,
                )
            })
            .collect();

        let valid: Vec<&CellRecord> = cell_results.iter().flatten().collect();
        let invalid = cell_results.len() - valid.len();

        let mut levels = Vec::new();
        for &r in &cfg.r_grid {
            let level_cells: Vec<&&CellRecord> = valid
                .iter()
                .filter(|c| (c.r - r).abs() < 1e-12 && !c.wgsr.is_nan())
                .collect();
            if level_cells.is_empty() {
                continue;
            }
            let nn = level_cells.len() as f64;
            let wgsr_mean = level_cells.iter().map(|c| c.wgsr).sum::<f64>() / nn;
            let ate_mean = level_cells.iter().map(|c| c.ate_obs).sum::<f64>() / nn;
            let ci = if level_cells.len() >= 2 {
                let var = level_cells
                    .iter()
                    .map(|c| (c.ate_obs - ate_mean).powi(2))
                    .sum::<f64>()
                    / (nn - 1.0);
                let half = t_critical_975(nn - 1.0) * (var / nn).sqrt();
                (ate_mean - half, ate_mean + half)
            } else {
                (ate_mean, ate_mean)
            };
            levels.push(LevelSummary {
                r,
                wgsr_mean,
                ate_mean,
                ate_ci95: ci,
                valid_cells: level_cells.len(),
            });
        }

        let fit = fit_network(net, g.mean_degree(), truth, invalid, levels)?;
        fits.push(fit);
        cells.extend(cell_results.into_iter().flatten());
    }

    Ok(SweepResult { cells, fits })
}

#[allow(clippy::too_many_arguments)]
fn simulate_cell(
    g: &WeightedGraph,
    base: &Partition,
    events: &ShareEventLog,
    net: &NetworkSpec,
    cfg: &SweepConfig,
    outcome: &OutcomeModelConfig,
    net_seed: u64,
    truth: f64,
    ri: usize,
    rep: usize,
) -> Option<CellRecord> {
    let r = cfg.r_grid[ri];
    let cell_tag = (ri as u64) * 100_000 + rep as u64;

    // per-replication randomization salt, shared across levels
    let salt = cfg.seed ^ rep as u64;
    // sharer flags are drawn per replication, shared across levels
    let sharers = draw_sharers(
        g.n(),
        outcome.s_prob,
        mix2(mix2(net_seed, 0x5348), rep as u64),
    );
    let noise = draw_noise(
        g.n(),
        outcome.noise_sd,
        mix2(mix2(net_seed, 0x4550), cell_tag),
    );

    let perturbed = perturb_cids(g, base, r, mix2(mix2(net_seed, 0x50), cell_tag)).ok()?;
    let a = assign(
        &perturbed,
        cfg.buckets,
        &cfg.treat_buckets,
        &cfg.ctrl_buckets,
        salt,
    )
    .ok()?;

    let treated: Vec<bool> = (0..g.n()).map(|i| a.arm_of_node(i) == Arm::Treatment).collect();
    let in_ctrl: Vec<bool> = (0..g.n()).map(|i| a.arm_of_node(i) == Arm::Control).collect();
    let n_treat = treated.iter().filter(|&&t| t).count();
    let n_ctrl = in_ctrl.iter().filter(|&&t| t).count();
    if n_treat == 0 || n_ctrl == 0 {
        return None; // degenerate arm: cell invalid
    }

    let y = apply_outcome_model(g, &treated, &sharers, outcome.tau, outcome.delta, &noise);
    let mean_treat: f64 = y
        .iter()
        .zip(&treated)
        .filter(|&(_, &t)| t)
        .map(|(v, _)| v)
        .sum::<f64>()
        / n_treat as f64;
    let mean_ctrl: f64 = y
        .iter()
        .zip(&in_ctrl)
        .filter(|&(_, &c)| c)
        .map(|(v, _)| v)
        .sum::<f64>()
        / n_ctrl as f64;
    let ate = mean_treat - mean_ctrl;

    // symmetric spillover-containment metric: average the two one-sided
    // within-group share ratios
    let w_t = wgsr(events, &a, Arm::Treatment, Arm::Control)?;
    let w_c = wgsr(events, &a, Arm::Control, Arm::Treatment)?;
    let w = 0.5 * (w_t + w_c);

    Some(CellRecord {
        network: net.label.clone(),
        mean_degree: g.mean_degree(),
        r,
        rep,
        wgsr: w,
        ate_obs: ate,
        bias: ate - truth,
    })
}

fn fit_network(
    net: &NetworkSpec,
    mean_degree: f64,
    truth: f64,
    invalid: usize,
    levels: Vec<LevelSummary>,
) -> Result<NetworkFit> {
    if levels.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "network {}: fewer than 2 valid levels to fit",
            net.label
        )));
    }
    let xs: Vec<f64> = levels.iter().map(|l| l.wgsr_mean).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.ate_mean).collect();
    let (slope, intercept, r2) = ols(&xs, &ys)?;

    let top = levels
        .iter()
        .max_by(|a, b| a.wgsr_mean.partial_cmp(&b.wgsr_mean).unwrap())
        .unwrap();
    let bottom = levels
        .iter()
        .min_by(|a, b| a.wgsr_mean.partial_cmp(&b.wgsr_mean).unwrap())
        .unwrap();
    let bias_reduction = if (bottom.ate_mean - truth).abs() > 0.0 {
        1.0 - (top.ate_mean - truth).abs() / (bottom.ate_mean - truth).abs()
    } else {
        0.0
    };

    Ok(NetworkFit {
        network: net.label.clone(),
        mean_degree,
        slope,
        intercept,
        r2,
        extrapolated_ate: intercept + slope,
        true_ate: truth,
        bias_reduction,
        invalid_cells: invalid,
        levels,
    })
}

/// Per-network bias reduction: 1 − |bias at the highest-WGSR level| over
/// |bias at the lowest-WGSR level|, both taken as replication means.
pub fn bias_reduction(sweep: &SweepResult) -> Vec<(String, f64)> {
    sweep
        .fits
        .iter()
        .map(|f| (f.network.clone(), f.bias_reduction))
        .collect()
}

/// Ordinary least squares of y on x: (slope, intercept, R²).
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "ols needs at least two paired points".to_string(),
        ));
    }
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "ols x values are all identical".to_string(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_tot: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r2))
}

/// Write cell records as CSV with the fixed header
/// `network,mean_degree,r,rep,wgsr,ate_obs,bias` (floats at 1e-9).
pub fn write_cells_csv<W: std::io::Write>(cells: &[CellRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "network,mean_degree,r,rep,wgsr,ate_obs,bias")?;
    for c in cells {
        writeln!(
            out,
            "{},{:.9},{:.9},{},{:.9},{:.9},{:.9}",
            c.network, c.mean_degree, c.r, c.rep, c.wgsr, c.ate_obs, c.bias
        )?;
    }
    Ok(())
}
