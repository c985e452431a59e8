//! Two-sample Kolmogorov–Smirnov comparison of performance distributions.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::preprocess::LogTargetConfig;

/// Name recorded in reports for the p-value method used here.
pub const PVALUE_METHOD: &str = "asymptotic Kolmogorov distribution with Stephens small-sample correction";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic_d: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    pub algorithm_id: String,
    pub significant: bool,
}

fn sorted_finite(values: &[f64], label: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Domain(format!("KS sample `{label}` is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "KS sample `{label}` contains non-finite values"
        )));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Largest gap between the right-continuous empirical CDFs of `x` and `y`.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    let xs = sorted_finite(x, "x")?;
    let ys = sorted_finite(y, "y")?;
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    // Gap scaled by n*m, kept integral so ties are compared exactly.
    let mut best: u128 = 0;
    while i < n && j < m {
        let t = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        let a = i as u128 * m as u128;
        let b = j as u128 * n as u128;
        best = best.max(a.abs_diff(b));
    }
    Ok(best as f64 / (n as f64 * m as f64))
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)`.
///
/// For `lambda < 1` the equivalent theta-function form
/// `1 - sqrt(2 pi)/lambda * sum_{j>=1} exp(-(2j-1)^2 pi^2 / (8 lambda^2))`
/// is used because the alternating series converges slowly there.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    const TOL: f64 = 1e-12;
    if lambda.is_nan() || lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.0 {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for j in 1u32.. {
            let k = f64::from(2 * j - 1);
            let term = (-k * k * c).exp();
            sum += term;
            if term < TOL * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let a = -2.0 * lambda * lambda;
        let mut sum = 0.0;
        let mut sign = 1.0;
        for j in 1u32.. {
            let jf = f64::from(j);
            let term = (a * jf * jf).exp();
            sum += sign * term;
            if term < TOL {
                break;
            }
            sign = -sign;
        }
        2.0 * sum
    };
    q.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Asymptotic two-sided p-value for statistic `d` with sample sizes `n`, `m`.
pub fn ks_pvalue(d: f64, n: usize, m: usize) -> f64 {
    if d <= 0.0 || n == 0 || m == 0 {
        return 1.0;
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let root = ne.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    kolmogorov_q(lambda)
}

pub fn ks_test(x: &[f64], y: &[f64], algorithm_id: &str, alpha: f64) -> Result<KsResult> {
    let d = ks_statistic(x, y)?;
    let p = ks_pvalue(d, x.len(), y.len());
    Ok(KsResult {
        statistic_d: d,
        p_value: p,
        n: x.len(),
        m: y.len(),
        algorithm_id: algorithm_id.to_string(),
        significant: p < alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpace {
    Log,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsCell {
    pub row: String,
    pub col: String,
    pub result: KsResult,
}

/// Upper-triangular matrix: one cell per unordered suite pair, `row` before
/// `col` in suite order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsMatrix {
    pub algorithm_id: String,
    pub suite_ids: Vec<String>,
    pub target_space: TargetSpace,
    pub alpha: f64,
    pub method: String,
    pub cells: Vec<KsCell>,
}

impl KsMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<&KsResult> {
        self.cells
            .iter()
            .find(|c| (c.row == a && c.col == b) || (c.row == b && c.col == a))
            .map(|c| &c.result)
    }
}

pub fn performance_ks_matrix(
    dataset: &Dataset,
    algorithm_id: &str,
    alpha: f64,
    space: TargetSpace,
    log_cfg: &LogTargetConfig,
) -> Result<KsMatrix> {
    log_cfg.validate()?;
    let samples: Vec<Vec<f64>> = dataset
        .suites
        .iter()
        .map(|s| {
            let prec = dataset
                .performance
                .iter()
                .filter(|p| p.algorithm_id == algorithm_id && p.suite_id == s.suite_id)
                .map(|p| p.median_target_precision);
            let values: Vec<f64> = match space {
                TargetSpace::Log => prec.map(|v| log_cfg.apply(v)).collect(),
                TargetSpace::Raw => prec.collect(),
            };
            if values.is_empty() {
                Err(Error::Coverage {
                    algorithm: algorithm_id.to_string(),
                    suite: s.suite_id.clone(),
                    detail: "no performance records".into(),
                })
            } else {
                Ok(values)
            }
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            cells.push(KsCell {
                row: dataset.suites[i].suite_id.clone(),
                col: dataset.suites[j].suite_id.clone(),
                result: ks_test(&samples[i], &samples[j], algorithm_id, alpha)?,
            });
        }
    }
    Ok(KsMatrix {
        algorithm_id: algorithm_id.to_string(),
        suite_ids: dataset.suite_ids(),
        target_space: space,
        alpha,
        method: PVALUE_METHOD.to_string(),
        cells,
    })
}
