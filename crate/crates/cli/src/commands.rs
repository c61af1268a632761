//! Subcommand implementations.

use std::io::Write;
use std::path::PathBuf;

use serde_json::json;

use netexp_core::clustering::{
    balanced_louvain, composite_score, load_partition, load_partition_pairs, lpa_constrained,
    quality, write_partition, LouvainConfig,
};
use netexp_core::experiment::bucket_of_cluster;
use netexp_core::graph::{
    build_multi_behavior, load_edge_list, watts_strogatz, write_edge_list_with_header,
    BehaviorWeights,
};
use netexp_core::inference::{
    aggregate_ratios, cupac, cuped, dim_inference, select_covariates, BucketRow, BucketTable,
    CupacConfig, PredictorSpec,
};
use netexp_core::simulate::{run_sweep, write_cells_csv, NetworkSpec, SweepConfig};

use crate::config::{
    emit_json, parse_behavior_weights, require, resolve, resolve_bucket_list, FileConfig,
};
use crate::{
    AnalyzeArgs, AssignArgs, CliError, ClusterArgs, GenGraphArgs, MetricsArgs, SimulateArgs,
};

pub fn gen_graph(args: GenGraphArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.common.config.as_deref())?;
    let out: PathBuf = require(&args.out, &cfg, "out")?;
    let seed = resolve(&args.seed, &cfg, "seed", 42u64)?;

    match args.kind.as_str() {
        "ws" => {
            let n = resolve(&args.n, &cfg, "n", 10_000usize)?;
            let k = require(&args.k, &cfg, "k")?;
            let p = resolve(&args.p, &cfg, "p", 0.1f64)?;
            let g = watts_strogatz(n, k, p, seed)?;
            let header = vec![
                ("kind".to_string(), "ws".to_string()),
                ("n".to_string(), n.to_string()),
                ("k".to_string(), k.to_string()),
                ("p".to_string(), p.to_string()),
                ("seed".to_string(), seed.to_string()),
            ];
            write_edge_list_with_header(&g, &header, &out)?;
        }
        "multibehavior" => {
            let input: PathBuf = require(&args.input, &cfg, "input")?;
            let spec: String = require(&args.weights, &cfg, "weights")?;
            let weights = BehaviorWeights::new(parse_behavior_weights(&spec)?)?;
            let g = build_multi_behavior(&input, &weights)?;
            let header = vec![
                ("kind".to_string(), "multibehavior".to_string()),
                ("input".to_string(), input.display().to_string()),
                ("weights".to_string(), spec),
            ];
            write_edge_list_with_header(&g, &header, &out)?;
        }
        other => return Err(CliError::Usage(format!("unknown graph kind `{other}`"))),
    }
    Ok(())
}

pub fn cluster(args: ClusterArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.common.config.as_deref())?;
    let graph_path: PathBuf = require(&args.graph, &cfg, "graph")?;
    let algorithm = resolve(&args.algorithm, &cfg, "algorithm", "balanced-louvain".to_string())?;
    let gamma = resolve(&args.gamma, &cfg, "gamma", 1.0f64)?;
    let seed = resolve(&args.seed, &cfg, "seed", 42u64)?;
    let out_partition: PathBuf = require(&args.out_partition, &cfg, "out_partition")?;

    let g = load_edge_list(&graph_path, false)?;

    let mut header = vec![("algorithm".to_string(), algorithm.clone())];
    let mut algo_echo = serde_json::Map::new();
    let (partition, default_ctrl) = match algorithm.as_str() {
        "balanced-louvain" | "louvain" => {
            let (alpha, n_max) = if algorithm == "louvain" {
                (0.0, -1)
            } else {
                (
                    resolve(&args.alpha, &cfg, "alpha", 0.3f64)?,
                    require(&args.n_max, &cfg, "n_max")?,
                )
            };
            let lcfg = LouvainConfig {
                alpha,
                n_max,
                gamma,
                seed,
                ..Default::default()
            };
            lcfg.validate()?;
            header.extend([
                ("alpha".to_string(), alpha.to_string()),
                ("n_max".to_string(), n_max.to_string()),
                ("gamma".to_string(), gamma.to_string()),
                ("seed".to_string(), seed.to_string()),
            ]);
            if algorithm == "balanced-louvain" {
                algo_echo.insert("alpha".into(), json!(alpha));
                algo_echo.insert("n_max".into(), json!(n_max));
            }
            let default_ctrl = if n_max > 0 { n_max as usize } else { g.n() };
            (balanced_louvain(&g, &lcfg)?, default_ctrl)
        }
        "lpa" => {
            let theta = require(&args.theta, &cfg, "theta")?;
            let max_iters = resolve(&args.max_iters, &cfg, "max_iters", 100usize)?;
            header.extend([
                ("theta".to_string(), theta.to_string()),
                ("max_iters".to_string(), max_iters.to_string()),
                ("seed".to_string(), seed.to_string()),
            ]);
            algo_echo.insert("theta".into(), json!(theta));
            algo_echo.insert("max_iters".into(), json!(max_iters));
            (lpa_constrained(&g, theta, seed, max_iters)?, theta)
        }
        other => return Err(CliError::Usage(format!("unknown algorithm `{other}`"))),
    };

    let ctrl_threshold = resolve(&args.ctrl_threshold, &cfg, "ctrl_threshold", default_ctrl)?;
    let sigma_max = match args.sigma_max {
        Some(v) => Some(v),
        None => cfg.get::<f64>("sigma_max")?,
    };

    write_partition(&g, &partition, &header, &out_partition)?;

    let mut report = quality(&g, &partition, gamma, ctrl_threshold)?;
    if let Some(sm) = sigma_max {
        report.composite_score = Some(composite_score(
            report.modularity,
            report.intra_edge_ratio,
            report.size_variance,
            sm,
            report.ctrl,
        )?);
    }

    let mut config_echo = json!({
        "graph": graph_path.display().to_string(),
        "algorithm": algorithm,
        "gamma": gamma,
        "seed": seed,
        "ctrl_threshold": ctrl_threshold,
        "sigma_max": sigma_max,
        "out_partition": out_partition.display().to_string(),
        "clusters": partition.num_clusters(),
    });
    for (key, value) in algo_echo {
        config_echo[key] = value;
    }
    emit_json(
        config_echo,
        "quality",
        serde_json::to_value(&report).expect("serializable"),
        args.out_report.as_deref(),
    )
}

pub fn metrics(args: MetricsArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.common.config.as_deref())?;
    let graph_path: PathBuf = require(&args.graph, &cfg, "graph")?;
    let partition_path: PathBuf = require(&args.partition, &cfg, "partition")?;
    let gamma = resolve(&args.gamma, &cfg, "gamma", 1.0f64)?;

    let g = load_edge_list(&graph_path, false)?;
    let p = load_partition(&g, &partition_path)?;
    let ctrl_threshold = resolve(&args.ctrl_threshold, &cfg, "ctrl_threshold", g.n())?;
    let sigma_max = match args.sigma_max {
        Some(v) => Some(v),
        None => cfg.get::<f64>("sigma_max")?,
    };

    let mut report = quality(&g, &p, gamma, ctrl_threshold)?;
    if let Some(sm) = sigma_max {
        report.composite_score = Some(composite_score(
            report.modularity,
            report.intra_edge_ratio,
            report.size_variance,
            sm,
            report.ctrl,
        )?);
    }

    let config_echo = json!({
        "graph": graph_path.display().to_string(),
        "partition": partition_path.display().to_string(),
        "gamma": gamma,
        "ctrl_threshold": ctrl_threshold,
        "sigma_max": sigma_max,
        "clusters": p.num_clusters(),
    });
    emit_json(
        config_echo,
        "quality",
        serde_json::to_value(&report).expect("serializable"),
        args.out_report.as_deref(),
    )
}

pub fn assign(args: AssignArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.common.config.as_deref())?;
    let partition_path: PathBuf = require(&args.partition, &cfg, "partition")?;
    let buckets = resolve(&args.buckets, &cfg, "buckets", 10u32)?;
    let treat = resolve_bucket_list(&args.treat, &cfg, "treat", "0")?;
    let ctrl = resolve_bucket_list(&args.ctrl, &cfg, "ctrl", "1")?;
    let salt = resolve(&args.salt, &cfg, "salt", 0u64)?;
    let out_assignment: PathBuf = require(&args.out_assignment, &cfg, "out_assignment")?;
    let out_buckets: PathBuf = require(&args.out_buckets, &cfg, "out_buckets")?;

    if buckets == 0 {
        return Err(CliError::Usage("bucket count must be >= 1".to_string()));
    }
    for &b in treat.iter().chain(&ctrl) {
        if b >= buckets {
            return Err(CliError::Usage(format!("bucket {b} out of range 0..{buckets}")));
        }
    }
    if treat.iter().any(|b| ctrl.contains(b)) {
        return Err(CliError::Usage(
            "treatment and control bucket lists overlap".to_string(),
        ));
    }

    let pairs = load_partition_pairs(&partition_path)?;
    let mut arm_counts = [0usize; 3]; // treatment, control, holdout
    {
        let file = std::fs::File::create(&out_buckets)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out_buckets.display())))?;
        let mut out = std::io::BufWriter::new(file);
        for &(node, cluster) in &pairs {
            let bucket = bucket_of_cluster(cluster, salt, buckets);
            let arm = if treat.contains(&bucket) {
                arm_counts[0] += 1;
                "treatment"
            } else if ctrl.contains(&bucket) {
                arm_counts[1] += 1;
                "control"
            } else {
                arm_counts[2] += 1;
                "holdout"
            };
            writeln!(out, "{node}\t{bucket}\t{arm}")?;
        }
        out.flush()?;
    }

    let config_echo = json!({
        "partition": partition_path.display().to_string(),
        "buckets": buckets,
        "treat": treat,
        "ctrl": ctrl,
        "salt": salt,
        "out_buckets": out_buckets.display().to_string(),
    });
    let manifest = json!({
        "buckets": buckets,
        "salt": salt,
        "treat_buckets": treat,
        "ctrl_buckets": ctrl,
        "partition_file": partition_path.display().to_string(),
        "nodes": pairs.len(),
        "treatment_nodes": arm_counts[0],
        "control_nodes": arm_counts[1],
        "holdout_nodes": arm_counts[2],
    });
    emit_json(config_echo, "assignment", manifest, Some(&out_assignment))
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve(&args.seed, &cfg, "seed", 42u64)?;
    let preset = match args.preset {
        Some(p) => Some(p),
        None => cfg.get::<String>("preset")?,
    };

    let sweep_cfg = match preset.as_deref() {
        Some("paper") => SweepConfig::paper_preset(seed),
        Some(other) => return Err(CliError::Usage(format!("unknown preset `{other}`"))),
        // a config file holding a full sweep configuration (for example
        // the echo of a previous run) is taken verbatim, modulo --seed
        None if cfg.has("networks") => {
            let mut full: SweepConfig = cfg.as_struct()?;
            if let Some(s) = args.seed {
                full.seed = s;
            }
            full
        }
        None => {
            let n = resolve(&args.n, &cfg, "n", 10_000usize)?;
            let k_list = resolve(&args.k_list, &cfg, "k_list", "4,10,20".to_string())?;
            let p = resolve(&args.p, &cfg, "p", 0.1f64)?;
            let r_levels = resolve(&args.r_levels, &cfg, "r_levels", 10usize)?;
            if r_levels < 2 {
                return Err(CliError::Usage("r_levels must be >= 2".to_string()));
            }
            let reps = resolve(&args.reps, &cfg, "reps", 30usize)?;
            let buckets = resolve(&args.buckets, &cfg, "buckets", 10u32)?;
            let treat = resolve_bucket_list(&args.treat, &cfg, "treat", "0,1,2,3,4")?;
            let ctrl = resolve_bucket_list(&args.ctrl, &cfg, "ctrl", "5,6,7,8,9")?;
            let networks = k_list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    let k = s
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Usage(format!("invalid k `{s}`")))?;
                    Ok(NetworkSpec {
                        label: format!("k{k}"),
                        n,
                        k,
                        p,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            SweepConfig {
                networks,
                r_grid: (0..r_levels)
                    .map(|i| i as f64 / (r_levels - 1) as f64)
                    .collect(),
                reps,
                buckets,
                treat_buckets: treat,
                ctrl_buckets: ctrl,
                gamma: resolve(&args.gamma, &cfg, "gamma", 1.0f64)?,
                tau: resolve(&args.tau, &cfg, "tau", 1.0f64)?,
                delta: resolve(&args.delta, &cfg, "delta", 0.2f64)?,
                s_prob: resolve(&args.s_prob, &cfg, "s_prob", 0.3f64)?,
                noise_sd: resolve(&args.noise_sd, &cfg, "noise_sd", 0.1f64)?,
                seed,
            }
        }
    };

    let result = run_sweep(&sweep_cfg)?;

    if let Some(csv_path) = args.out_csv.as_deref() {
        let file = std::fs::File::create(csv_path)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", csv_path.display())))?;
        write_cells_csv(&result.cells, std::io::BufWriter::new(file))?;
    }

    let config_echo = serde_json::to_value(&sweep_cfg).expect("serializable");
    emit_json(
        config_echo,
        "fits",
        serde_json::to_value(&result.fits).expect("serializable"),
        args.out_fits.as_deref(),
    )
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.common.config.as_deref())?;
    let input: PathBuf = require(&args.input, &cfg, "input")?;
    let estimators = resolve(&args.estimators, &cfg, "estimators", "dim,cuped,cupac".to_string())?;
    let cuped_covariate = resolve(&args.cuped_covariate, &cfg, "cuped_covariate", 0usize)?;
    let folds = resolve(&args.k, &cfg, "k", 5usize)?;
    let seed = resolve(&args.seed, &cfg, "seed", 0u64)?;
    let select_threshold = match args.select_threshold {
        Some(v) => Some(v),
        None => cfg.get::<f64>("select_threshold")?,
    };
    let history_path = match &args.history {
        Some(p) => Some(p.clone()),
        None => cfg.get::<PathBuf>("history")?,
    };

    let table = BucketTable::from_csv_path(&input).map_err(data_err)?;

    // optional covariate pre-selection from a historical table
    let mut selected: Option<Vec<usize>> = None;
    if let (Some(history), Some(threshold)) = (&history_path, select_threshold) {
        let hist = BucketTable::from_csv_path(history).map_err(data_err)?;
        if hist.covariate_arity() != table.covariate_arity() {
            return Err(CliError::Data(format!(
                "history covariate arity {} differs from input arity {}",
                hist.covariate_arity(),
                table.covariate_arity()
            )));
        }
        let kept = select_covariates(&hist, threshold).map_err(data_err)?;
        if kept.is_empty() {
            eprintln!(
                "warning: no covariate reached |correlation| >= {threshold} on the history table; cupac uses all covariates"
            );
        } else {
            selected = Some(kept);
        }
    }

    let names: Vec<&str> = estimators
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(CliError::Usage("no estimators requested".to_string()));
    }

    let (_, r_ctrl, _) = aggregate_ratios(&table).map_err(data_err)?;
    let mut reports = Vec::new();
    for name in &names {
        let report = match *name {
            "dim" => dim_inference(&table).map_err(data_err)?,
            "cuped" => cuped(&table, cuped_covariate).map_err(data_err)?,
            "cupac" => {
                let cupac_cfg = CupacConfig {
                    folds,
                    model: PredictorSpec::Linear,
                    seed,
                };
                match &selected {
                    Some(kept) => {
                        let projected = project_covariates(&table, kept).map_err(data_err)?;
                        cupac(&projected, &cupac_cfg).map_err(data_err)?
                    }
                    None => cupac(&table, &cupac_cfg).map_err(data_err)?,
                }
            }
            other => return Err(CliError::Usage(format!("unknown estimator `{other}`"))),
        };
        // relative-difference convention: τ̂ / R̄_ctrl · 100
        let mut value = serde_json::to_value(&report).expect("serializable");
        value["rel_diff_pct"] = json!(report.ate / r_ctrl * 100.0);
        reports.push(value);
    }

    let config_echo = json!({
        "input": input.display().to_string(),
        "estimators": names,
        "cuped_covariate": cuped_covariate,
        "k": folds,
        "seed": seed,
        "history": history_path.map(|p| p.display().to_string()),
        "select_threshold": select_threshold,
        "selected_covariates": selected,
    });
    emit_json(
        config_echo,
        "reports",
        serde_json::Value::Array(reports),
        args.out.as_deref(),
    )
}

fn project_covariates(
    table: &BucketTable,
    kept: &[usize],
) -> netexp_core::Result<BucketTable> {
    let rows = table
        .rows()
        .iter()
        .map(|r| BucketRow {
            bucket_id: r.bucket_id,
            arm: r.arm,
            y: r.y,
            n: r.n,
            covariates: kept.iter().map(|&j| r.covariates[j]).collect(),
        })
        .collect();
    BucketTable::new(rows)
}

// analysis failures on real data are data errors, not usage errors
fn data_err(e: netexp_core::Error) -> CliError {
    CliError::Data(e.to_string())
}
