//! Bucket-level Welch inference on pseudo-outcome samples.

use crate::error::{Error, Result};
use crate::stats::{sample_variance, t_critical_975, t_two_sided_p};

/// Welch two-sample inference on per-arm values: the arm means estimate
/// the aggregated ratios, `Var(R̄_arm) = s²_arm / |B_arm|` with the
/// within-arm unbiased sample variance, `Var(τ̂)` is their sum, and the
/// degrees of freedom come from the bucket-level Welch–Satterthwaite
/// equation.
///
/// Returns `(ate, variance, t, df, p, ci95, flags)`.
#[allow(clippy::type_complexity)]
pub fn welch_inference(
    treat: &[f64],
    ctrl: &[f64],
) -> Result<(f64, f64, f64, f64, f64, (f64, f64), Vec<String>)> {
    if treat.len() < 2 || ctrl.len() < 2 {
        return Err(Error::Inference(format!(
            "at least 2 buckets per arm required for inference (got {} treatment, {} control)",
            treat.len(),
            ctrl.len()
        )));
    }
    let n_t = treat.len() as f64;
    let n_c = ctrl.len() as f64;
    let mean_t = treat.iter().sum::<f64>() / n_t;
    let mean_c = ctrl.iter().sum::<f64>() / n_c;
    let ate = mean_t - mean_c;

    let v_t = sample_variance(treat) / n_t;
    let v_c = sample_variance(ctrl) / n_c;
    let variance = v_t + v_c;

    if variance == 0.0 {
        // degenerate metric: no within-arm variation at all
        let (t, p) = if ate == 0.0 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok((
            ate,
            0.0,
            t,
            n_t + n_c - 2.0,
            p,
            (ate, ate),
            vec!["degenerate-variance".to_string()],
        ));
    }

    let df = variance.powi(2) / (v_t.powi(2) / (n_t - 1.0) + v_c.powi(2) / (n_c - 1.0));
    let t = ate / variance.sqrt();
    let p = t_two_sided_p(t, df);
    let half = t_critical_975(df) * variance.sqrt();
    Ok((ate, variance, t, df, p, (ate - half, ate + half), Vec::new()))
}
