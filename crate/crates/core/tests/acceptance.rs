//! Acceptance suite. Each test prints one PASS/FAIL line per criterion
//! (run with `--nocapture` to see them on success).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use netexp_core::clustering::{
    balanced_louvain, composite_score, louvain, modularity, LouvainConfig,
};
use netexp_core::experiment::{assign, graph_events, perturb_cids, wgsr, Arm, ShareEventLog};
use netexp_core::graph::{planted_partition, watts_strogatz, WeightedGraph};
use netexp_core::inference::{
    cupac, cupac_in_sample, cuped, dim_inference, var_red, BucketArm, BucketRow, BucketTable,
    CupacConfig, PredictorSpec,
};
use netexp_core::rng::{mix2, seeded_rng};
use netexp_core::simulate::{run_sweep, SweepConfig, SweepResult};

const SWEEP_SEED: u64 = 42;

fn paper_sweep() -> &'static (SweepResult, Duration) {
    static SWEEP: OnceLock<(SweepResult, Duration)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let result = run_sweep(&SweepConfig::paper_preset(SWEEP_SEED)).expect("paper sweep runs");
        (result, start.elapsed())
    })
}

fn verdict(criterion: &str, ok: bool, detail: &str) -> bool {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

#[test]
fn acceptance_1_simulation_bias_table() {
    let (sweep, elapsed) = paper_sweep();
    let targets_top = [("low", 1.215), ("medium", 1.528), ("high", 2.044)];
    let targets_bottom = [("low", 1.000), ("medium", 1.000), ("high", 1.001)];

    let mut ok = true;
    let mut details = Vec::new();
    for fit in &sweep.fits {
        let top = fit
            .levels
            .iter()
            .max_by(|a, b| a.wgsr_mean.partial_cmp(&b.wgsr_mean).unwrap())
            .unwrap();
        let bottom = fit
            .levels
            .iter()
            .min_by(|a, b| a.wgsr_mean.partial_cmp(&b.wgsr_mean).unwrap())
            .unwrap();
        let want_top = targets_top
            .iter()
            .find(|(n, _)| *n == fit.network)
            .unwrap()
            .1;
        let want_bottom = targets_bottom
            .iter()
            .find(|(n, _)| *n == fit.network)
            .unwrap()
            .1;
        ok &= (top.ate_mean - want_top).abs() <= 0.02;
        ok &= (bottom.ate_mean - want_bottom).abs() <= 0.02;
        ok &= (0.85..=0.92).contains(&fit.bias_reduction);
        details.push(format!(
            "{}: top ATE {:.4} (want {want_top}±0.02), bottom {:.4} (want {want_bottom}±0.02), bias reduction {:.3}",
            fit.network, top.ate_mean, bottom.ate_mean, fit.bias_reduction
        ));
    }
    ok &= *elapsed <= Duration::from_secs(300);
    details.push(format!("runtime {:.1}s (limit 300s)", elapsed.as_secs_f64()));
    assert!(
        verdict("1 (simulation bias table)", ok, &details.join("; ")),
        "{details:?}"
    );
}

#[test]
fn acceptance_2_linear_fit_and_extrapolation() {
    let (sweep, _) = paper_sweep();
    let mut ok = true;
    let mut details = Vec::new();
    for fit in &sweep.fits {
        let rel_err = (fit.extrapolated_ate - fit.true_ate).abs() / fit.true_ate;
        ok &= fit.r2 > 0.995;
        ok &= rel_err <= 0.005;
        ok &= fit.slope > 0.0; // spillover makes observed ATE rise with WGSR
        details.push(format!(
            "{}: R²={:.6}, extrapolated {:.4} vs true {:.2} ({:+.3}%)",
            fit.network,
            fit.r2,
            fit.extrapolated_ate,
            fit.true_ate,
            (fit.extrapolated_ate - fit.true_ate) / fit.true_ate * 100.0
        ));
    }
    assert!(
        verdict("2 (linear fit + WGSR=1 extrapolation)", ok, &details.join("; ")),
        "{details:?}"
    );
}

#[test]
fn acceptance_3_composite_score_oracle() {
    let sigma_max = 1_839_930.0;
    let rows = [
        (0.516, 0.496, 742_833.0, true, 0.631),
        (0.648, 0.548, 1_839_930.0, false, 0.294),
        (0.646, 0.500, 387_911.0, false, 0.516),
        (0.613, 0.496, 399_240.0, true, 0.707),
        (0.623, 0.511, 360_540.0, false, 0.519),
        (0.622, 0.511, 373_842.0, true, 0.716),
    ];
    let mut ok = true;
    let mut worst = 0.0f64;
    for (q, rho, var, ctrl, want) in rows {
        let got = composite_score(q, rho, var, sigma_max, ctrl).unwrap();
        worst = worst.max((got - want).abs());
        ok &= (got - want).abs() <= 1e-3;
    }
    assert!(verdict(
        "3 (composite score reproduces all six reference rows)",
        ok,
        &format!("worst deviation {worst:.2e} (tolerance 1e-3)")
    ));
}

#[test]
fn acceptance_4_hard_constraint_fuzz() {
    let n_max_cycle = [50usize, 200, 1000];
    let mut ok = true;
    let mut checked_equal = 0;
    for trial in 0..200u64 {
        let mut rng = seeded_rng(mix2(0xF022, trial));
        let n = if trial % 20 == 0 {
            rng.gen_range(2000..=5000)
        } else {
            rng.gen_range(50..=1500)
        };
        let g = if trial % 2 == 0 {
            let k = 2 * rng.gen_range(1..=4);
            let p: f64 = rng.gen_range(0.0..0.5);
            watts_strogatz(n, k.min(n - 1 - (n % 2)), p, trial).unwrap()
        } else {
            // a few planted blocks of random sizes
            let blocks: Vec<usize> = {
                let count = rng.gen_range(2..=6);
                let mut sizes = vec![n / count; count];
                sizes[0] += n % count;
                sizes
            };
            let p_in: f64 = rng.gen_range(0.02..0.2);
            planted_partition(&blocks, p_in, 0.005, trial).unwrap().0
        };
        let n_max = n_max_cycle[(trial % 3) as usize];
        let cfg = LouvainConfig {
            alpha: 0.3,
            n_max: n_max as i64,
            seed: trial,
            ..Default::default()
        };
        let p = balanced_louvain(&g, &cfg).unwrap();
        if p.max_cluster_size() > n_max {
            ok = false;
            println!(
                "  violation: trial {trial} n={n} max cluster {} > {n_max}",
                p.max_cluster_size()
            );
        }

        if trial % 4 == 0 && g.m() > 0.0 {
            // α = 0, no split: same path as the standard baseline
            let balanced = balanced_louvain(
                &g,
                &LouvainConfig {
                    alpha: 0.0,
                    n_max: -1,
                    seed: trial,
                    ..Default::default()
                },
            )
            .unwrap();
            let standard = louvain(&g, 1.0, trial).unwrap();
            let q_a = modularity(&g, &balanced, 1.0).unwrap();
            let q_b = modularity(&g, &standard, 1.0).unwrap();
            if balanced != standard || q_a.to_bits() != q_b.to_bits() {
                ok = false;
                println!("  α=0 mismatch on trial {trial}");
            }
            checked_equal += 1;
        }
    }
    assert!(verdict(
        "4 (hard-constraint guarantee, 200-graph fuzz)",
        ok,
        &format!(
            "200 graphs, n_max ∈ {{50, 200, 1000}}, no oversize cluster; α=0 path bit-identical to standard Louvain on {checked_equal} graphs"
        )
    ));
}

// Heavy-tailed planted blocks whose interiors are ring lattices, so
// communities agglomerate node by node and the soft penalty has a
// gradient to act on.
fn heavy_tailed_blocks(seed: u64) -> WeightedGraph {
    let block_sizes = [4000usize, 2400, 1500, 900, 550, 330, 200, 120];
    let k = 10usize;
    let n: usize = block_sizes.iter().sum();
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    let mut start = 0usize;
    for &size in &block_sizes {
        for i in 0..size {
            for d in 1..=k / 2 {
                let j = (i + d) % size;
                edges.push(((start + i) as u64, (start + j) as u64, 1.0));
            }
        }
        start += size;
    }
    let noise_edges = n / 10;
    let mut added = 0;
    while added < noise_edges {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a as u64, b as u64, 1.0));
            added += 1;
        }
    }
    WeightedGraph::from_edges_with_nodes(&edges, n).unwrap()
}

#[test]
fn acceptance_5_size_penalty_direction() {
    let mut medians = Vec::new();
    for alpha in [0.0, 0.2, 0.5] {
        let mut maxima = Vec::new();
        for seed in 0..10u64 {
            let g = heavy_tailed_blocks(1000 + seed);
            let cfg = LouvainConfig {
                alpha,
                n_max: -70,
                seed: 77 + seed,
                ..Default::default()
            };
            let p = balanced_louvain(&g, &cfg).unwrap();
            maxima.push(p.max_cluster_size());
        }
        maxima.sort_unstable();
        medians.push((maxima[4] + maxima[5]) / 2);
    }
    let ok = medians[0] >= medians[1] && medians[1] >= medians[2] && medians[0] > medians[2];
    assert!(verdict(
        "5 (size-penalty direction)",
        ok,
        &format!(
            "median max cluster over 10 seeds: α=0 → {}, α=0.2 → {}, α=0.5 → {}",
            medians[0], medians[1], medians[2]
        )
    ));
}

#[test]
fn acceptance_6_inference_identities() {
    let mut rng = seeded_rng(606);
    let mut ok = true;
    let mut details = Vec::new();

    // delta-pseudo mean identity on 100 random tables
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let rows: Vec<BucketRow> = (0..rng.gen_range(4..40))
            .map(|i| BucketRow {
                bucket_id: i,
                arm: if i % 2 == 0 { BucketArm::Treatment } else { BucketArm::Control },
                y: rng.gen_range(-10.0..100.0),
                n: rng.gen_range(0.5..50.0),
                covariates: vec![],
            })
            .collect();
        let sum_y: f64 = rows.iter().map(|r| r.y).sum();
        let sum_n: f64 = rows.iter().map(|r| r.n).sum();
        let t = BucketTable::new(rows).unwrap();
        let p = netexp_core::inference::delta_pseudo(&t).unwrap();
        let mean_z = p.z.iter().sum::<f64>() / p.z.len() as f64;
        let rel = ((mean_z - sum_y / sum_n) / (sum_y / sum_n)).abs();
        worst_rel = worst_rel.max(rel);
    }
    ok &= worst_rel <= 1e-12;
    details.push(format!("delta identity worst rel err {worst_rel:.2e} (≤1e-12)"));

    // Welch vs an independent textbook oracle on 100 random tables
    let mut worst_welch = 0.0f64;
    for _ in 0..100 {
        let nt = rng.gen_range(3..30);
        let nc = rng.gen_range(3..30);
        let zt: Vec<f64> = (0..nt).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let zc: Vec<f64> = (0..nc).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rows: Vec<BucketRow> = zt
            .iter()
            .enumerate()
            .map(|(i, &z)| BucketRow {
                bucket_id: i as u64,
                arm: BucketArm::Treatment,
                y: z,
                n: 1.0,
                covariates: vec![],
            })
            .chain(zc.iter().enumerate().map(|(i, &z)| BucketRow {
                bucket_id: 1000 + i as u64,
                arm: BucketArm::Control,
                y: z,
                n: 1.0,
                covariates: vec![],
            }))
            .collect();
        let t = BucketTable::new(rows).unwrap();
        let r = dim_inference(&t).unwrap();

        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let svar = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
        };
        let (m1, m2) = (mean(&zt), mean(&zc));
        let (v1, v2) = (svar(&zt) / nt as f64, svar(&zc) / nc as f64);
        let se2 = v1 + v2;
        let t_stat = (m1 - m2) / se2.sqrt();
        let df = se2 * se2
            / (v1.powi(2) / (nt as f64 - 1.0) + v2.powi(2) / (nc as f64 - 1.0));
        for (got, want) in [(r.ate, m1 - m2), (r.variance, se2), (r.t, t_stat), (r.df, df)] {
            worst_welch = worst_welch.max((got - want).abs());
        }
    }
    ok &= worst_welch <= 1e-9;
    details.push(format!("Welch vs oracle worst abs err {worst_welch:.2e} (≤1e-9)"));

    // CUPED with X = Z zeroes the adjusted variance
    let rows: Vec<BucketRow> = (0..20)
        .map(|i| {
            let z = rng.gen_range(0.0..3.0);
            BucketRow {
                bucket_id: i,
                arm: if i % 2 == 0 { BucketArm::Treatment } else { BucketArm::Control },
                y: z,
                n: 1.0,
                covariates: vec![z],
            }
        })
        .collect();
    let t = BucketTable::new(rows).unwrap();
    let r = cuped(&t, 0).unwrap();
    ok &= r.variance.abs() <= 1e-18;
    details.push(format!("CUPED X=Z adjusted variance {:.2e}", r.variance));

    // var_red(DIM, DIM) = 0 exactly
    let dim = dim_inference(&t).unwrap();
    ok &= var_red(&dim, &dim) == 0.0;
    details.push("var_red(DIM, DIM) = 0".to_string());

    assert!(verdict("6 (inference identities)", ok, &details.join("; ")));
}

// A/A bucket table: null effect, 2 informative + 8 noise covariates.
fn aa_table(seed: u64, buckets_per_arm: usize) -> BucketTable {
    let mut rng = seeded_rng(seed);
    let n_u = Normal::new(0.0, 0.05).unwrap();
    let n_e = Normal::new(0.0, 0.04).unwrap();
    let n_x = Normal::new(0.0, 0.02).unwrap();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    for b in 0..(2 * buckets_per_arm) {
        let arm = if b < buckets_per_arm { BucketArm::Treatment } else { BucketArm::Control };
        let u: f64 = n_u.sample(&mut rng);
        let e: f64 = n_e.sample(&mut rng);
        let n_b: f64 = rng.gen_range(950.0..1050.0);
        let rate = 0.5 + u + e;
        let mut covariates = vec![u + n_x.sample(&mut rng), 0.5 * u + n_x.sample(&mut rng)];
        for _ in 0..8 {
            covariates.push(noise.sample(&mut rng));
        }
        rows.push(BucketRow {
            bucket_id: b as u64,
            arm,
            y: rate * n_b,
            n: n_b,
            covariates,
        });
    }
    BucketTable::new(rows).unwrap()
}

#[test]
fn acceptance_7_null_calibration() {
    let start = Instant::now();
    let resamples = 2000usize;
    let mut rej = [0usize; 3]; // dim, cross-fitted cupac, in-sample cupac
    let mut tau_sum = [0.0f64; 2]; // cuped, cross-fitted cupac
    let mut tau_sq = [0.0f64; 2];
    for i in 0..resamples {
        let t = aa_table(mix2(977, i as u64), 50);
        let dim = dim_inference(&t).unwrap();
        let cross = cupac(
            &t,
            &CupacConfig {
                folds: 5,
                model: PredictorSpec::Linear,
                seed: mix2(31, i as u64),
            },
        )
        .unwrap();
        let insample = cupac_in_sample(&t, PredictorSpec::Linear).unwrap();
        let cu = cuped(&t, 0).unwrap();
        for (slot, report) in [(0, &dim), (1, &cross), (2, &insample)] {
            if report.p_value < 0.05 {
                rej[slot] += 1;
            }
        }
        for (slot, report) in [(0, &cu), (1, &cross)] {
            tau_sum[slot] += report.ate;
            tau_sq[slot] += report.ate * report.ate;
        }
    }
    let pct = |x: usize| 100.0 * x as f64 / resamples as f64;
    let elapsed = start.elapsed();

    let mut ok = (3.5..=6.5).contains(&pct(rej[0]));
    ok &= (3.5..=6.5).contains(&pct(rej[1]));
    ok &= rej[2] > rej[1];
    ok &= elapsed <= Duration::from_secs(180);

    // adjusted estimators stay centered on zero under the null
    let mut centered = String::new();
    for (slot, name) in [(0usize, "cuped"), (1, "cupac")] {
        let mean = tau_sum[slot] / resamples as f64;
        let sd = (tau_sq[slot] / resamples as f64 - mean * mean).sqrt();
        let se = sd / (resamples as f64).sqrt();
        ok &= mean.abs() <= 2.0 * se;
        centered.push_str(&format!("{name} null mean {mean:.2e} (2se {:.2e}); ", 2.0 * se));
    }

    assert!(verdict(
        "7 (A/A null calibration)",
        ok,
        &format!(
            "type I at 0.05: DIM {:.2}%, cross-fitted CUPAC {:.2}%, in-sample CUPAC {:.2}% (bounds [3.5, 6.5], in-sample strictly above cross-fitted); {}runtime {:.1}s (limit 180s)",
            pct(rej[0]),
            pct(rej[1]),
            pct(rej[2]),
            centered,
            elapsed.as_secs_f64()
        )
    ));
}

// Tables where three covariates jointly explain ≥ 80% of Z variance.
fn signal_table(seed: u64, buckets_per_arm: usize) -> BucketTable {
    let mut rng = seeded_rng(seed);
    let nx = Normal::new(0.0, 1.0).unwrap();
    let ne = Normal::new(0.0, 0.35).unwrap();
    let mut rows = Vec::new();
    for b in 0..(2 * buckets_per_arm) {
        let arm = if b % 2 == 0 { BucketArm::Treatment } else { BucketArm::Control };
        let x1: f64 = nx.sample(&mut rng);
        let x2: f64 = nx.sample(&mut rng);
        let x3: f64 = nx.sample(&mut rng);
        let z = 10.0 + 0.5 * x1 + 0.4 * x2 + 0.35 * x3 + ne.sample(&mut rng);
        rows.push(BucketRow {
            bucket_id: b as u64,
            arm,
            y: z,
            n: 1.0,
            covariates: vec![x1, x2, x3],
        });
    }
    BucketTable::new(rows).unwrap()
}

#[test]
fn acceptance_8_variance_reduction_ordering() {
    let trials = 100usize;
    let mut cupac_wins = 0;
    for i in 0..trials {
        let t = signal_table(mix2(555, i as u64), 50);
        let c = cupac(
            &t,
            &CupacConfig {
                folds: 5,
                model: PredictorSpec::Linear,
                seed: mix2(77, i as u64),
            },
        )
        .unwrap();
        let cu = cuped(&t, 0).unwrap();
        if c.var_red.unwrap() > cu.var_red.unwrap() {
            cupac_wins += 1;
        }
    }
    assert!(verdict(
        "8 (variance-reduction ordering)",
        cupac_wins >= 80,
        &format!("CUPAC VarRed beat single-covariate CUPED in {cupac_wins}/100 trials (need ≥80)")
    ));
}

#[test]
fn acceptance_9_wgsr_properties() {
    let mut ok = true;
    let mut details = Vec::new();

    // uniform-random events over balanced arms sit at one half
    {
        let n = 2000usize;
        let g = watts_strogatz(n, 2, 0.0, 1).unwrap();
        let p = netexp_core::clustering::Partition::singletons(&g);
        let a = assign(&p, 10, &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], 2024).unwrap();
        let mut rng = seeded_rng(909);
        let mut events = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let u = rng.gen_range(0..n) as u32;
            let mut v = rng.gen_range(0..n) as u32;
            while v == u {
                v = rng.gen_range(0..n) as u32;
            }
            events.push((u, v));
        }
        let w = wgsr(&ShareEventLog::new(events), &a, Arm::Treatment, Arm::Control).unwrap();
        ok &= (w - 0.5).abs() <= 0.02;
        details.push(format!("uniform events: WGSR {w:.4} (0.5±0.02)"));
    }

    // fully intra-arm events give exactly 1.0
    {
        let g = WeightedGraph::from_edges(&[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        let p = netexp_core::clustering::Partition::new(&g, vec![0, 0, 0, 1, 1]).unwrap();
        let salt = (0..)
            .find(|&s| {
                netexp_core::experiment::bucket_of_cluster(0, s, 2) == 0
                    && netexp_core::experiment::bucket_of_cluster(1, s, 2) == 1
            })
            .unwrap();
        let a = assign(&p, 2, &[0], &[1], salt).unwrap();
        let w = wgsr(&graph_events(&g), &a, Arm::Treatment, Arm::Control);
        ok &= w == Some(1.0);
        details.push(format!("intra-arm events: WGSR {w:?} (exactly 1.0)"));
    }

    // perturbation r: 1 → 0 lifts the median WGSR from ~0.5 to ≥ 0.9
    {
        let mut at_r1 = Vec::new();
        let mut at_r0 = Vec::new();
        for seed in 0..10u64 {
            let g = watts_strogatz(10_000, 10, 0.1, seed).unwrap();
            let base = louvain(&g, 1.0, seed).unwrap();
            let events = graph_events(&g);
            for (r, out) in [(1.0, &mut at_r1), (0.0, &mut at_r0)] {
                let perturbed = perturb_cids(&g, &base, r, mix2(seed, 5)).unwrap();
                let a = assign(&perturbed, 10, &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], seed).unwrap();
                let w_t = wgsr(&events, &a, Arm::Treatment, Arm::Control).unwrap();
                let w_c = wgsr(&events, &a, Arm::Control, Arm::Treatment).unwrap();
                out.push(0.5 * (w_t + w_c));
            }
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            0.5 * (v[4] + v[5])
        };
        let m1 = median(&mut at_r1);
        let m0 = median(&mut at_r0);
        ok &= (m1 - 0.5).abs() <= 0.02;
        ok &= m0 >= 0.90;
        details.push(format!(
            "k=10 network: median WGSR {m1:.4} at r=1 (≈0.50), {m0:.4} at r=0 (≥0.90)"
        ));
    }

    assert!(verdict("9 (WGSR properties)", ok, &details.join("; ")));
}
