//! Cross-module invariants and property tests.

use proptest::prelude::*;
use rand::Rng;

use netexp_core::clustering::{louvain, Partition};
use netexp_core::experiment::{assign, graph_events, perturb_cids, wgsr, Arm};
use netexp_core::graph::{
    build_multi_behavior, watts_strogatz, BehaviorWeights, WeightedGraph,
};
use netexp_core::inference::{dim_inference, BucketArm, BucketRow, BucketTable};
use netexp_core::rng::{mix2, seeded_rng};
use netexp_core::simulate::{run_sweep, NetworkSpec, SweepConfig};

fn arb_edges() -> impl Strategy<Value = Vec<(u64, u64, f64)>> {
    proptest::collection::vec(
        (0u64..50, 0u64..50, 0.0f64..10.0).prop_filter("no self-loops", |(a, b, _)| a != b),
        0..120,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // degree-sum identity after every construction path
    #[test]
    fn degree_sum_is_twice_m(edges in arb_edges()) {
        let g = WeightedGraph::from_edges(&edges).unwrap();
        let degree_sum: f64 = (0..g.n()).map(|i| g.degree(i)).sum();
        prop_assert!((degree_sum - 2.0 * g.m()).abs() <= 1e-9 * (1.0 + degree_sum.abs()));
    }

    // multi-behavior aggregation is linear in the behavior weights
    #[test]
    fn behavior_weights_scale_linearly(
        lines in proptest::collection::vec(
            (0u64..20, 0u64..20, 0u32..3, 0.1f64..5.0)
                .prop_filter("no self-loops", |(a, b, _, _)| a != b),
            1..60,
        ),
        base in proptest::collection::vec(0.1f64..2.0, 3),
    ) {
        let mut text = String::new();
        for (src, dst, behavior, strength) in &lines {
            text.push_str(&format!("{src} {dst} {behavior} {strength}\n"));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("behaviors.txt");
        std::fs::write(&path, text).unwrap();

        let w1 = BehaviorWeights::new(base.iter().enumerate().map(|(d, &w)| (d as u32, w)).collect()).unwrap();
        let w2 = BehaviorWeights::new(base.iter().enumerate().map(|(d, &w)| (d as u32, 2.0 * w)).collect()).unwrap();
        let g1 = build_multi_behavior(&path, &w1).unwrap();
        let g2 = build_multi_behavior(&path, &w2).unwrap();
        prop_assert!((g2.m() - 2.0 * g1.m()).abs() <= 1e-9 * (1.0 + g2.m()));
        for i in 0..g1.n() {
            prop_assert!((g2.degree(i) - 2.0 * g1.degree(i)).abs() <= 1e-9 * (1.0 + g2.degree(i)));
        }
    }

    // hashing into buckets is a pure function of (cluster id, salt, B)
    #[test]
    fn bucket_hash_is_pure(cid in any::<u64>(), salt in any::<u64>(), b in 1u32..1000) {
        let x = netexp_core::experiment::bucket_of_cluster(cid, salt, b);
        let y = netexp_core::experiment::bucket_of_cluster(cid, salt, b);
        prop_assert_eq!(x, y);
        prop_assert!(x < b);
    }
}

// WGSR under cluster assignment dominates the intra-cluster edge ratio of
// the assignment universe, across random perturbed partitions.
#[test]
fn wgsr_dominates_intra_cluster_ratio() {
    let mut checked = 0;
    for seed in 0..5u64 {
        let g = watts_strogatz(2_000, 8, 0.15, seed).unwrap();
        let base = louvain(&g, 1.0, seed).unwrap();
        let events = graph_events(&g);
        for pert in 0..10u64 {
            let r = pert as f64 / 10.0;
            let p = perturb_cids(&g, &base, r, mix2(seed, pert)).unwrap();
            let a = assign(&p, 10, &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], mix2(seed, 100 + pert))
                .unwrap();
            let w = wgsr(&events, &a, Arm::Treatment, Arm::Control).unwrap();
            let mut intra = 0.0;
            for (i, j, wt) in g.edges() {
                if p.cluster_of(i) == p.cluster_of(j) {
                    intra += wt;
                }
            }
            let rho = intra / g.m();
            assert!(
                w >= rho - 1e-12,
                "seed {seed} r {r}: WGSR {w:.4} < rho {rho:.4}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}

// decreasing the perturbation ratio from 1 to 0 never drags the median
// WGSR down
#[test]
fn perturbation_lifts_wgsr_monotonically() {
    let r_grid: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
    let mut medians = Vec::new();
    for &r in &r_grid {
        let mut ws = Vec::new();
        for seed in 0..10u64 {
            let g = watts_strogatz(2_000, 10, 0.1, seed).unwrap();
            let base = louvain(&g, 1.0, seed).unwrap();
            let events = graph_events(&g);
            let p = perturb_cids(&g, &base, r, mix2(seed, 7)).unwrap();
            let a = assign(&p, 10, &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], seed).unwrap();
            let w_t = wgsr(&events, &a, Arm::Treatment, Arm::Control).unwrap();
            let w_c = wgsr(&events, &a, Arm::Control, Arm::Treatment).unwrap();
            ws.push(0.5 * (w_t + w_c));
        }
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(0.5 * (ws[4] + ws[5]));
    }
    // r_grid ascending → medians non-increasing
    for pair in medians.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-9,
            "medians not monotone: {medians:?}"
        );
    }
}

// with no spillover the fitted ATE-on-WGSR slope is zero within noise
#[test]
fn zero_spillover_gives_flat_fit() {
    let mut cfg = SweepConfig::paper_preset(17);
    cfg.networks = vec![NetworkSpec {
        label: "null".into(),
        n: 2_000,
        k: 6,
        p: 0.1,
    }];
    cfg.r_grid = (0..5).map(|i| i as f64 / 4.0).collect();
    cfg.reps = 8;
    cfg.delta = 0.0;
    let sweep = run_sweep(&cfg).unwrap();
    let fit = &sweep.fits[0];

    // slope standard error from the level-mean regression
    let xs: Vec<f64> = fit.levels.iter().map(|l| l.wgsr_mean).collect();
    let ys: Vec<f64> = fit.levels.iter().map(|l| l.ate_mean).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (fit.intercept + fit.slope * x)).powi(2))
        .sum();
    let se = (ss_res / (n - 2.0) / sxx).sqrt();
    assert!(
        fit.slope.abs() <= 2.0 * se,
        "slope {} exceeds 2 se {}",
        fit.slope,
        se
    );
}

// every level's CI across replications contains the replication mean
#[test]
fn sweep_level_ci_contains_mean() {
    let mut cfg = SweepConfig::paper_preset(3);
    cfg.networks = vec![NetworkSpec {
        label: "tiny".into(),
        n: 800,
        k: 6,
        p: 0.1,
    }];
    cfg.r_grid = vec![0.0, 0.5, 1.0];
    cfg.reps = 5;
    let sweep = run_sweep(&cfg).unwrap();
    for level in &sweep.fits[0].levels {
        assert!(level.ate_ci95.0 <= level.ate_mean && level.ate_mean <= level.ate_ci95.1);
    }
}

// A/A p-values are close to uniform: rejection rate at 0.05 lands in the
// 4%-6% band over 1000 resamples
#[test]
fn dim_null_rejection_rate() {
    use rand_distr::{Distribution, Normal};
    let resamples = 1000;
    let mut rejections = 0;
    for i in 0..resamples {
        let mut rng = seeded_rng(mix2(5, i));
        let ny = Normal::new(50.0, 5.0).unwrap();
        let rows: Vec<BucketRow> = (0..60)
            .map(|b| BucketRow {
                bucket_id: b,
                arm: if b % 2 == 0 { BucketArm::Treatment } else { BucketArm::Control },
                y: ny.sample(&mut rng),
                n: rng.gen_range(95.0..105.0),
                covariates: vec![],
            })
            .collect();
        let t = BucketTable::new(rows).unwrap();
        if dim_inference(&t).unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    let rate = 100.0 * rejections as f64 / resamples as f64;
    assert!(
        (4.0..=6.0).contains(&rate),
        "DIM A/A rejection rate {rate:.2}% outside [4%, 6%]"
    );
}

// partitions survive the file round trip with provenance headers intact
#[test]
fn partition_file_round_trip_with_perturbation() {
    let g = watts_strogatz(300, 6, 0.2, 4).unwrap();
    let base = louvain(&g, 1.0, 4).unwrap();
    let p = perturb_cids(&g, &base, 0.3, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perturbed.tsv");
    let header = vec![("r".to_string(), "0.3".to_string())];
    netexp_core::clustering::write_partition(&g, &p, &header, &path).unwrap();
    let back = netexp_core::clustering::load_partition(&g, &path).unwrap();
    assert_eq!(p, back);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# r=0.3\n"));
}

// singleton namespace ids from perturbation cannot collide with dense ids
#[test]
fn perturbed_ids_live_in_reserved_namespace() {
    let g = watts_strogatz(100, 4, 0.1, 11).unwrap();
    let base = Partition::new(&g, (0..100).map(|i| i % 7).collect()).unwrap();
    let p = perturb_cids(&g, &base, 0.5, 3).unwrap();
    for i in 0..g.n() {
        let c = p.cluster_of(i);
        if c >= netexp_core::experiment::SINGLETON_NAMESPACE {
            assert_eq!(c - netexp_core::experiment::SINGLETON_NAMESPACE, g.node_id(i));
        } else {
            assert_eq!(c, base.cluster_of(i));
        }
    }
}
