//! Thin wrappers around the Student-t distribution used for p-values and
//! confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// CDF of the Student-t distribution with `df` degrees of freedom.
pub fn t_cdf(x: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df.max(f64::MIN_POSITIVE)).expect("valid t parameters");
    dist.cdf(x)
}

/// Two-sided p-value of a t statistic.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    (2.0 * (1.0 - t_cdf(t.abs(), df))).clamp(0.0, 1.0)
}

/// 97.5% quantile of the Student-t distribution (95% two-sided critical
/// value).
pub fn t_critical_975(df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df.max(f64::MIN_POSITIVE)).expect("valid t parameters");
    dist.inverse_cdf(0.975)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n − 1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation; 0 when either side has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}
