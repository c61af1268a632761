//! Bucket-level treatment-effect inference for ratio metrics under
//! cluster randomization: delta-method pseudo-outcomes, Welch t-tests,
//! and CUPED / cross-fitted CUPAC variance reduction.

mod estimators;
mod linear;
mod welch;

pub use estimators::{
    cupac, cupac_in_sample, cuped, dim_inference, select_covariates, var_red, CupacConfig,
};
pub use linear::{FittedPredictor, LinearPredictor, PredictorSpec};
pub use welch::welch_inference;

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arm of a bucket row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BucketArm {
    Treatment,
    Control,
}

/// One aggregated bucket: metric numerator `y`, denominator `n`, and a
/// fixed-arity covariate vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BucketRow {
    pub bucket_id: u64,
    pub arm: BucketArm,
    pub y: f64,
    pub n: f64,
    pub covariates: Vec<f64>,
}

/// Table of bucket rows with uniform covariate arity and unique ids.
#[derive(Debug, Clone)]
pub struct BucketTable {
    rows: Vec<BucketRow>,
    arity: usize,
}

impl BucketTable {
    /// Rows are canonicalized to ascending bucket-id order, so estimates
    /// do not depend on input row order.
    pub fn new(mut rows: Vec<BucketRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Inference("bucket table is empty".to_string()));
        }
        rows.sort_by_key(|r| r.bucket_id);
        let arity = rows[0].covariates.len();
        let mut ids = HashSet::new();
        for row in &rows {
            if !ids.insert(row.bucket_id) {
                return Err(Error::Inference(format!(
                    "duplicate bucket id {}",
                    row.bucket_id
                )));
            }
            if row.covariates.len() != arity {
                return Err(Error::Inference(format!(
                    "bucket {}: covariate arity {} differs from {}",
                    row.bucket_id,
                    row.covariates.len(),
                    arity
                )));
            }
            if row.n <= 0.0 || !row.n.is_finite() {
                return Err(Error::Inference(format!(
                    "bucket {}: denominator must be positive, got {}",
                    row.bucket_id, row.n
                )));
            }
        }
        Ok(BucketTable { rows, arity })
    }

    pub fn rows(&self) -> &[BucketRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn covariate_arity(&self) -> usize {
        self.arity
    }

    /// Row indices of an arm, in table order.
    pub fn arm_indices(&self, arm: BucketArm) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.arm == arm)
            .map(|(i, _)| i)
            .collect()
    }

    /// Parse from CSV with header `bucket_id,arm,y,n,x1,...,xp`.
    pub fn from_csv_reader<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        let mut arity: Option<usize> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if lineno == 1 {
                if fields.len() < 4 || fields[0] != "bucket_id" || fields[1] != "arm" {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "expected header `bucket_id,arm,y,n,x1,...`",
                    ));
                }
                arity = Some(fields.len() - 4);
                continue;
            }
            let arity = arity.expect("header parsed first");
            if fields.len() != 4 + arity {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {} fields, got {}", 4 + arity, fields.len()),
                ));
            }
            let bucket_id: u64 = fields[0].parse().map_err(|_| {
                Error::parse(path, lineno, format!("invalid bucket id `{}`", fields[0]))
            })?;
            let arm = match fields[1].to_ascii_lowercase().as_str() {
                "treatment" => BucketArm::Treatment,
                "control" => BucketArm::Control,
                other => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("arm must be `treatment` or `control`, got `{other}`"),
                    ))
                }
            };
            let parse_f = |s: &str, what: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::parse(path, lineno, format!("invalid {what} `{s}`")))
            };
            let y = parse_f(fields[2], "y")?;
            let n = parse_f(fields[3], "n")?;
            let covariates = fields[4..]
                .iter()
                .map(|s| parse_f(s, "covariate"))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(BucketRow {
                bucket_id,
                arm,
                y,
                n,
                covariates,
            });
        }
        BucketTable::new(rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file), path)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "bucket_id,arm,y,n")?;
        for i in 0..self.arity {
            write!(out, ",x{}", i + 1)?;
        }
        writeln!(out)?;
        for r in &self.rows {
            let arm = match r.arm {
                BucketArm::Treatment => "treatment",
                BucketArm::Control => "control",
            };
            write!(out, "{},{},{:.9},{:.9}", r.bucket_id, arm, r.y, r.n)?;
            for x in &r.covariates {
                write!(out, ",{x:.9}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Delta-method pseudo-outcomes and the pooled reference means.
#[derive(Debug, Clone)]
pub struct PseudoOutcomes {
    /// Z_b per table row, in row order.
    pub z: Vec<f64>,
    pub mu_y: f64,
    pub mu_n: f64,
}

/// First-order delta-method linearization of the bucket ratio:
/// `Z_b = μ_Y/μ_N + Y_b/μ_N − (μ_Y/μ_N²)·N_b`, with μ_Y and μ_N the means
/// of Y_b and N_b pooled across all buckets.
pub fn delta_pseudo(t: &BucketTable) -> Result<PseudoOutcomes> {
    let count = t.len() as f64;
    let mu_y = t.rows().iter().map(|r| r.y).sum::<f64>() / count;
    let mu_n = t.rows().iter().map(|r| r.n).sum::<f64>() / count;
    if mu_n == 0.0 {
        return Err(Error::Inference("mean denominator is zero".to_string()));
    }
    let ratio = mu_y / mu_n;
    let z = t
        .rows()
        .iter()
        .map(|r| ratio + r.y / mu_n - ratio / mu_n * r.n)
        .collect();
    Ok(PseudoOutcomes { z, mu_y, mu_n })
}

/// Aggregated per-arm ratios and their difference:
/// `R̄ = ΣY_b / ΣN_b` per arm, `τ̂ = R̄_treat − R̄_ctrl`.
pub fn aggregate_ratios(t: &BucketTable) -> Result<(f64, f64, f64)> {
    let mut sums = [(0.0, 0.0); 2]; // (ΣY, ΣN) for treat, ctrl
    for r in t.rows() {
        let slot = match r.arm {
            BucketArm::Treatment => &mut sums[0],
            BucketArm::Control => &mut sums[1],
        };
        slot.0 += r.y;
        slot.1 += r.n;
    }
    for (idx, name) in ["treatment", "control"].iter().enumerate() {
        if sums[idx].1 <= 0.0 {
            return Err(Error::EmptyArm(name.to_string()));
        }
    }
    let r_treat = sums[0].0 / sums[0].1;
    let r_ctrl = sums[1].0 / sums[1].1;
    Ok((r_treat, r_ctrl, r_treat - r_ctrl))
}

/// Result of one estimator run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// `dim`, `cuped`, or `cupac`.
    pub estimator: String,
    pub ate: f64,
    pub variance: f64,
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    pub p_value: f64,
    pub ci95: (f64, f64),
    /// 1 − Var/Var_DIM; absent for DIM itself.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_red: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Cross-fitting fold count (CUPAC only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}
