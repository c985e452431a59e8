//! Standardization fitted on a training suite, and log-space targets.

use serde::{Deserialize, Serialize};

use crate::data::{PerformanceRecord, SuiteMatrix};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::compensated_sum;

/// Per-feature mean and population standard deviation.
///
/// A scale of exactly zero marks a constant column; such columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub fitted_on: String,
}

pub fn fit_scaler(train: &SuiteMatrix) -> Result<ScalerParams> {
    let (means, scales) = fit_columns(&train.features()).map_err(|e| match e {
        Error::InsufficientData(msg) => {
            Error::InsufficientData(format!("suite `{}`: {msg}", train.suite_id))
        }
        other => other,
    })?;
    Ok(ScalerParams {
        feature_names: train.feature_names.clone(),
        means,
        scales,
        fitted_on: train.suite_id.clone(),
    })
}

/// Column means and population standard deviations of `m`.
pub fn fit_columns(m: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = m.nrows();
    if k < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 rows, got {k}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::Domain(
            "standardization input contains non-finite values".into(),
        ));
    }
    let kf = k as f64;
    let mut means = Vec::with_capacity(m.ncols());
    let mut scales = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let first = m.get(0, j);
        if m.column(j).all(|v| v == first) {
            means.push(first);
            scales.push(0.0);
            continue;
        }
        let mean = compensated_sum(m.column(j)) / kf;
        let var = compensated_sum(m.column(j).map(|v| (v - mean) * (v - mean))) / kf;
        means.push(mean);
        scales.push(var.sqrt());
    }
    Ok((means, scales))
}

/// `(x - mean) / scale` per column; zero-scale columns become 0.
pub fn transform_columns(m: &Matrix, means: &[f64], scales: &[f64]) -> Result<Matrix> {
    if means.len() != m.ncols() || scales.len() != m.ncols() {
        return Err(Error::Shape(format!(
            "scaler has {} columns, matrix has {}",
            means.len(),
            m.ncols()
        )));
    }
    let mut out = m.clone();
    for i in 0..out.nrows() {
        for ((v, mean), scale) in out.row_mut(i).iter_mut().zip(means).zip(scales) {
            *v = if *scale == 0.0 { 0.0 } else { (*v - mean) / scale };
        }
    }
    Ok(out)
}

pub fn apply_scaler(params: &ScalerParams, m: &SuiteMatrix) -> Result<SuiteMatrix> {
    if m.feature_names != params.feature_names {
        return Err(Error::Schema(format!(
            "suite `{}` features do not match scaler fitted on `{}`",
            m.suite_id, params.fitted_on
        )));
    }
    let scaled = transform_columns(&m.features(), &params.means, &params.scales)?;
    m.with_features(&scaled)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTargetConfig {
    /// Precisions below this value are clamped to it before taking the log.
    pub floor: f64,
    pub base: f64,
}

impl Default for LogTargetConfig {
    fn default() -> Self {
        Self {
            floor: 1e-8,
            base: 10.0,
        }
    }
}

impl LogTargetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::Config(format!(
                "log floor must be positive and finite, got {}",
                self.floor
            )));
        }
        if !(self.base > 0.0 && self.base.is_finite() && self.base != 1.0) {
            return Err(Error::Config(format!(
                "log base must be positive and not 1, got {}",
                self.base
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, precision: f64) -> f64 {
        let x = precision.max(self.floor);
        if self.base == 10.0 {
            x.log10()
        } else if self.base == 2.0 {
            x.log2()
        } else if self.base == std::f64::consts::E {
            x.ln()
        } else {
            x.log(self.base)
        }
    }
}

pub fn log_transform_targets(
    records: &[PerformanceRecord],
    cfg: &LogTargetConfig,
) -> Result<Vec<PerformanceRecord>> {
    cfg.validate()?;
    records
        .iter()
        .map(|r| {
            if r.median_target_precision.is_nan() || r.median_target_precision < 0.0 {
                return Err(Error::Domain(format!(
                    "negative precision for instance `{}` of suite `{}`",
                    r.instance_id, r.suite_id
                )));
            }
            Ok(PerformanceRecord {
                log_target: Some(cfg.apply(r.median_target_precision)),
                ..r.clone()
            })
        })
        .collect()
}
