//! Bucket-level predictors for CUPAC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RIDGE: f64 = 1e-8;

/// Which predictor CUPAC trains per fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorSpec {
    /// Multivariate least squares with intercept (ridge-stabilized).
    Linear,
    /// Fixed-value predictor that ignores covariates; degenerate baseline
    /// that exercises the no-signal fallback.
    Constant(f64),
}

/// A fitted predictor.
#[derive(Debug, Clone)]
pub enum FittedPredictor {
    Linear(LinearPredictor),
    Constant(f64),
}

impl FittedPredictor {
    pub fn fit(spec: PredictorSpec, xs: &[&[f64]], zs: &[f64]) -> Result<Self> {
        match spec {
            PredictorSpec::Linear => Ok(FittedPredictor::Linear(LinearPredictor::fit(xs, zs)?)),
            PredictorSpec::Constant(c) => {
                if xs.len() < 2 {
                    return Err(Error::Inference(
                        "predictor needs at least 2 training rows".to_string(),
                    ));
                }
                Ok(FittedPredictor::Constant(c))
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            FittedPredictor::Linear(m) => m.predict(x),
            FittedPredictor::Constant(c) => *c,
        }
    }
}

/// Least-squares linear model fit by centered normal equations with a
/// small ridge term on the Gram diagonal, so collinear or constant
/// covariates stay finite. Pure function of the training data.
#[derive(Debug, Clone)]
pub struct LinearPredictor {
    coefficients: Vec<f64>,
    intercept: f64,
}

impl LinearPredictor {
    pub fn fit(xs: &[&[f64]], zs: &[f64]) -> Result<Self> {
        if xs.len() != zs.len() || xs.len() < 2 {
            return Err(Error::Inference(
                "predictor needs at least 2 training rows".to_string(),
            ));
        }
        let p = xs[0].len();
        for row in xs {
            if row.len() != p {
                return Err(Error::Inference("covariate arity mismatch".to_string()));
            }
        }
        let n = xs.len() as f64;
        let x_means: Vec<f64> = (0..p)
            .map(|j| xs.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let z_mean = zs.iter().sum::<f64>() / n;

        // centered Gram matrix with ridge, centered cross moments
        let mut gram = vec![vec![0.0; p]; p];
        let mut xz = vec![0.0; p];
        for (row, &z) in xs.iter().zip(zs) {
            for j in 0..p {
                let xj = row[j] - x_means[j];
                xz[j] += xj * (z - z_mean);
                for l in j..p {
                    gram[j][l] += xj * (row[l] - x_means[l]);
                }
            }
        }
        for j in 0..p {
            for l in 0..j {
                gram[j][l] = gram[l][j];
            }
            gram[j][j] += RIDGE;
        }

        let coefficients = solve(gram, xz)?;
        let intercept = z_mean
            - coefficients
                .iter()
                .zip(&x_means)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        Ok(LinearPredictor {
            coefficients,
            intercept,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

/// Gaussian elimination with partial pivoting; matrices here are tiny
/// (covariate arity by covariate arity).
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Inference("singular normal equations".to_string()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_recovered() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let zs: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] + 1.0).collect();
        let m = LinearPredictor::fit(&refs, &zs).unwrap();
        assert!((m.coefficients()[0] - 3.0).abs() < 1e-6);
        assert!((m.intercept() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_duplicates_stay_finite_and_fit() {
        // duplicated covariate column; pseudo-inverse oracle says the
        // training predictions must still match the targets
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, i as f64]).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let zs: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] - 4.0).collect();
        let m = LinearPredictor::fit(&refs, &zs).unwrap();
        assert!(m.coefficients().iter().all(|c| c.is_finite()));
        for (x, &z) in refs.iter().zip(&zs) {
            assert!((m.predict(x) - z).abs() < 1e-6, "{} vs {z}", m.predict(x));
        }
        // min-norm solution splits the weight across the duplicates
        assert!((m.coefficients()[0] - 1.0).abs() < 1e-4);
        assert!((m.coefficients()[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_variance_covariate_gets_zero_weight() {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![5.0, i as f64]).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let zs = vec![2.0; 8];
        let m = LinearPredictor::fit(&refs, &zs).unwrap();
        assert!(m.coefficients()[0].abs() < 1e-9);
        assert!((m.intercept() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_rows_rejected() {
        let xs = [vec![1.0]];
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        assert!(LinearPredictor::fit(&refs, &[1.0]).is_err());
    }
}
