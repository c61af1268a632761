//! DIM, CUPED, and CUPAC estimators over bucket tables.

use crate::error::{Error, Result};
use crate::inference::{
    delta_pseudo, welch_inference, AnalysisReport, BucketArm, BucketTable, FittedPredictor,
    PredictorSpec,
};
use crate::rng::mix2;
use crate::stats::pearson;

/// Difference-in-means on delta-method pseudo-outcomes with Welch
/// inference across buckets.
pub fn dim_inference(t: &BucketTable) -> Result<AnalysisReport> {
    let pseudo = delta_pseudo(t)?;
    report_from_adjusted(t, &pseudo.z, "dim")
}

/// CUPED: adjust pseudo-outcomes with a single covariate,
/// `Z' = Z − θ(X − mean X)` with `θ = Cov(Z, X) / Var(X)` pooled over all
/// buckets, then run DIM inference on the adjusted values.
pub fn cuped(t: &BucketTable, covariate: usize) -> Result<AnalysisReport> {
    if covariate >= t.covariate_arity() {
        return Err(Error::Inference(format!(
            "covariate index {covariate} out of range (arity {})",
            t.covariate_arity()
        )));
    }
    let pseudo = delta_pseudo(t)?;
    let x: Vec<f64> = t.rows().iter().map(|r| r.covariates[covariate]).collect();
    let (theta, adjusted) = control_variate_adjust(&pseudo.z, &x)?;

    let mut report = report_from_adjusted(t, &adjusted, "cuped")?;
    report.theta = Some(theta);
    report.var_red = Some(var_red_value(report.variance, dim_inference(t)?.variance));
    Ok(report)
}

/// Cross-fitting configuration for [`cupac`].
#[derive(Debug, Clone)]
pub struct CupacConfig {
    /// Fold count K ≥ 2.
    pub folds: usize,
    pub model: PredictorSpec,
    /// Seed for the bucket-id fold hash.
    pub seed: u64,
}

impl Default for CupacConfig {
    fn default() -> Self {
        CupacConfig {
            folds: 5,
            model: PredictorSpec::Linear,
            seed: 0,
        }
    }
}

/// Cross-fitted CUPAC. Control buckets are hashed into K folds; each
/// fold's model is trained on the other K−1 folds ("only control buckets
/// are used for training"), control buckets receive out-of-sample
/// predictions, and treatment buckets the average over the K models.
/// Then `Z' = Z − θ(Ẑ − mean Ẑ)` with `θ = Cov(Z, Ẑ) / Var(Ẑ)` pooled,
/// and DIM-style inference on the adjusted values.
///
/// When the predictions carry no variance the estimator falls back to
/// DIM and flags the report `no-signal`.
pub fn cupac(t: &BucketTable, cfg: &CupacConfig) -> Result<AnalysisReport> {
    if cfg.folds < 2 {
        return Err(Error::Inference("cross-fitting requires K >= 2".to_string()));
    }
    if t.covariate_arity() == 0 {
        return Err(Error::Inference("cupac requires covariates".to_string()));
    }
    let control = t.arm_indices(BucketArm::Control);
    if control.len() < cfg.folds {
        return Err(Error::Inference(format!(
            "control arm has {} buckets but K = {}",
            control.len(),
            cfg.folds
        )));
    }

    let pseudo = delta_pseudo(t)?;
    let fold_of = |bucket_id: u64| (mix2(cfg.seed, bucket_id) % cfg.folds as u64) as usize;

    // train one model per fold on the control rows outside it
    let mut models = Vec::with_capacity(cfg.folds);
    for k in 0..cfg.folds {
        let train: Vec<usize> = control
            .iter()
            .copied()
            .filter(|&i| fold_of(t.rows()[i].bucket_id) != k)
            .collect();
        if train.len() < 2 {
            return Err(Error::Inference(format!(
                "fold {k} has fewer than 2 training rows"
            )));
        }
        let xs: Vec<&[f64]> = train
            .iter()
            .map(|&i| t.rows()[i].covariates.as_slice())
            .collect();
        let zs: Vec<f64> = train.iter().map(|&i| pseudo.z[i]).collect();
        models.push(FittedPredictor::fit(cfg.model, &xs, &zs)?);
    }

    let z_hat: Vec<f64> = t
        .rows()
        .iter()
        .map(|row| match row.arm {
            BucketArm::Control => models[fold_of(row.bucket_id)].predict(&row.covariates),
            BucketArm::Treatment => {
                models.iter().map(|m| m.predict(&row.covariates)).sum::<f64>()
                    / cfg.folds as f64
            }
        })
        .collect();

    finish_cupac(t, &pseudo.z, &z_hat, cfg.folds)
}

/// CUPAC without cross-fitting: one model trained on all control buckets,
/// predictions made in-sample. Kept as a comparison baseline; overfit
/// predictions inflate the false-positive rate, which is exactly what
/// cross-fitting is there to prevent.
pub fn cupac_in_sample(t: &BucketTable, model: PredictorSpec) -> Result<AnalysisReport> {
    if t.covariate_arity() == 0 {
        return Err(Error::Inference("cupac requires covariates".to_string()));
    }
    let control = t.arm_indices(BucketArm::Control);
    if control.len() < 2 {
        return Err(Error::Inference(
            "control arm needs at least 2 buckets".to_string(),
        ));
    }
    let pseudo = delta_pseudo(t)?;
    let xs: Vec<&[f64]> = control
        .iter()
        .map(|&i| t.rows()[i].covariates.as_slice())
        .collect();
    let zs: Vec<f64> = control.iter().map(|&i| pseudo.z[i]).collect();
    let fitted = FittedPredictor::fit(model, &xs, &zs)?;
    let z_hat: Vec<f64> = t.rows().iter().map(|r| fitted.predict(&r.covariates)).collect();
    finish_cupac(t, &pseudo.z, &z_hat, 1)
}

fn finish_cupac(
    t: &BucketTable,
    z: &[f64],
    z_hat: &[f64],
    folds: usize,
) -> Result<AnalysisReport> {
    match control_variate_adjust(z, z_hat) {
        Ok((theta, adjusted)) => {
            let mut report = report_from_adjusted(t, &adjusted, "cupac")?;
            report.theta = Some(theta);
            report.folds = Some(folds);
            report.var_red = Some(var_red_value(report.variance, dim_inference(t)?.variance));
            Ok(report)
        }
        Err(_) => {
            // predictions carry no variance: fall back to DIM
            let mut report = report_from_adjusted(t, z, "cupac")?;
            report.folds = Some(folds);
            report.var_red = Some(0.0);
            report.flags.push("no-signal".to_string());
            Ok(report)
        }
    }
}

/// θ = Cov(z, x) / Var(x) pooled over all rows, and the adjusted values
/// `z − θ(x − mean x)`. Errors when Var(x) = 0.
fn control_variate_adjust(z: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let var_x: f64 = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / (n - 1.0);
    if var_x == 0.0 {
        return Err(Error::Inference("covariate has zero variance".to_string()));
    }
    let cov: f64 = x
        .iter()
        .zip(z)
        .map(|(a, b)| (a - mx) * (b - mz))
        .sum::<f64>()
        / (n - 1.0);
    let theta = cov / var_x;
    let adjusted = z.iter().zip(x).map(|(b, a)| b - theta * (a - mx)).collect();
    Ok((theta, adjusted))
}

fn report_from_adjusted(t: &BucketTable, values: &[f64], name: &str) -> Result<AnalysisReport> {
    let treat: Vec<f64> = t
        .arm_indices(BucketArm::Treatment)
        .into_iter()
        .map(|i| values[i])
        .collect();
    let ctrl: Vec<f64> = t
        .arm_indices(BucketArm::Control)
        .into_iter()
        .map(|i| values[i])
        .collect();
    let (ate, variance, tstat, df, p, ci95, flags) = welch_inference(&treat, &ctrl)?;
    Ok(AnalysisReport {
        estimator: name.to_string(),
        ate,
        variance,
        t: tstat,
        df,
        p_value: p,
        ci95,
        var_red: None,
        theta: None,
        folds: None,
        flags,
    })
}

fn var_red_value(variance: f64, dim_variance: f64) -> f64 {
    if variance == dim_variance {
        0.0
    } else {
        1.0 - variance / dim_variance
    }
}

/// Variance-reduction ratio of a method against the DIM baseline.
pub fn var_red(report: &AnalysisReport, dim_report: &AnalysisReport) -> f64 {
    var_red_value(report.variance, dim_report.variance)
}

/// Keep covariates whose absolute Pearson correlation with the
/// pseudo-outcome on the historical table reaches the threshold.
/// Returned indices are in ascending order; an empty result is allowed.
pub fn select_covariates(history: &BucketTable, threshold: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Inference(format!(
            "correlation threshold must be in [0, 1], got {threshold}"
        )));
    }
    let pseudo = delta_pseudo(history)?;
    let mut kept = Vec::new();
    for j in 0..history.covariate_arity() {
        let x: Vec<f64> = history.rows().iter().map(|r| r.covariates[j]).collect();
        if pearson(&x, &pseudo.z).abs() >= threshold {
            kept.push(j);
        }
    }
    Ok(kept)
}
