//! Multivariate energy two-sample test between suites.
//!
//! For samples `P` (k1 rows) and `Q` (k2 rows) in R^n the statistic is
//!
//! ```text
//! E = k1*k2/(k1+k2) * ( 2/(k1*k2) * sum_i sum_m |p_i - q_m|
//!                       - 1/k1^2  * sum_i sum_j |p_i - p_j|
//!                       - 1/k2^2  * sum_l sum_m |q_l - q_m| )
//! ```
//!
//! with Euclidean norms. The p-value comes from re-splitting the pooled rows
//! at random: `p = (1 + #{E_r >= E_obs}) / (R + 1)`.
//!
//! Rows are put in a canonical (lexicographic) order before summing, and each
//! sum is compensated, so the statistic does not depend on the order in which
//! rows were supplied and equals exactly zero for identical multisets.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{cmp_rows, euclidean, CompensatedSum};
use crate::preprocess::{fit_columns, transform_columns};
use crate::seed;

pub const DEFAULT_PERMUTATIONS: usize = 199;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
    pub significant: bool,
}

/// Pairwise distances of the pooled sample, rows in canonical order.
struct PooledDistances {
    size: usize,
    dist: Vec<f64>,
    /// `true` for rows that came from the first sample.
    from_first: Vec<bool>,
}

impl PooledDistances {
    fn new(p: &Matrix, q: &Matrix) -> Self {
        let mut rows: Vec<(&[f64], bool)> = p
            .rows()
            .map(|r| (r, true))
            .chain(q.rows().map(|r| (r, false)))
            .collect();
        // Stable: ties keep first-sample rows ahead of second-sample rows.
        rows.sort_by(|a, b| cmp_rows(a.0, b.0));
        let size = rows.len();
        let mut dist = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = euclidean(rows[i].0, rows[j].0);
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        Self {
            size,
            dist,
            from_first: rows.iter().map(|r| r.1).collect(),
        }
    }

    fn observed_split(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.size).partition(|&i| self.from_first[i])
    }

    #[inline]
    fn block_sum(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut s = CompensatedSum::new();
        for &i in a {
            let row = &self.dist[i * self.size..(i + 1) * self.size];
            for &j in b {
                s.add(row[j]);
            }
        }
        s.value()
    }

    /// Statistic for the split `(a, b)`; both index lists ascending.
    fn statistic(&self, a: &[usize], b: &[usize]) -> f64 {
        let k1 = a.len() as f64;
        let k2 = b.len() as f64;
        let cross = self.block_sum(a, b);
        let within_a = self.block_sum(a, a);
        let within_b = self.block_sum(b, b);
        let e = (k1 * k2 / (k1 + k2))
            * (2.0 * cross / (k1 * k2) - within_a / (k1 * k1) - within_b / (k2 * k2));
        // Rounding can leave a tiny negative value; the statistic is a
        // nonnegative quantity.
        e.max(0.0)
    }
}

fn check_samples(p: &Matrix, q: &Matrix) -> Result<()> {
    if p.nrows() == 0 || q.nrows() == 0 {
        return Err(Error::Shape("energy statistic needs nonempty samples".into()));
    }
    if p.ncols() != q.ncols() {
        return Err(Error::Shape(format!(
            "samples have {} and {} columns",
            p.ncols(),
            q.ncols()
        )));
    }
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::Domain("samples contain non-finite values".into()));
    }
    Ok(())
}

/// The energy statistic between two samples (rows are observations).
pub fn energy_statistic(p: &Matrix, q: &Matrix) -> Result<f64> {
    check_samples(p, q)?;
    let pooled = PooledDistances::new(p, q);
    let (a, b) = pooled.observed_split();
    Ok(pooled.statistic(&a, &b))
}

/// Permutation test of equal distributions.
///
/// Replicate `r` shuffles the pooled row indices with its own RNG stream,
/// seeded from `(seed, r)`, so the result does not depend on how replicates
/// are scheduled across threads.
pub fn permutation_pvalue(
    p: &Matrix,
    q: &Matrix,
    permutations: usize,
    seed: u64,
    alpha: f64,
) -> Result<EnergyTestResult> {
    check_samples(p, q)?;
    if permutations < 1 {
        return Err(Error::Config("permutation count must be at least 1".into()));
    }
    if p.nrows() + q.nrows() < 4 {
        return Err(Error::InsufficientData(format!(
            "permutation test needs at least 4 pooled rows, got {}",
            p.nrows() + q.nrows()
        )));
    }
    let pooled = PooledDistances::new(p, q);
    let (a, b) = pooled.observed_split();
    let observed = pooled.statistic(&a, &b);
    let k1 = a.len();

    let exceed = (0..permutations)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = seed::rng(seed::derive(seed, r as u64));
            let mut idx: Vec<usize> = (0..pooled.size).collect();
            idx.shuffle(&mut rng);
            let (left, right) = idx.split_at_mut(k1);
            left.sort_unstable();
            right.sort_unstable();
            pooled.statistic(left, right) >= observed
        })
        .count();

    let p_value = (1 + exceed) as f64 / (permutations + 1) as f64;
    Ok(EnergyTestResult {
        statistic: observed,
        p_value,
        permutations,
        seed,
        significant: p_value <= alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// Standardize both suites with parameters fitted on the row suite.
    RowFitted,
    None,
}

impl std::str::FromStr for ScalingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" | "row_fitted" => Ok(ScalingMode::RowFitted),
            "none" => Ok(ScalingMode::None),
            other => Err(Error::Config(format!(
                "unknown scaling mode `{other}` (expected `row` or `none`)"
            ))),
        }
    }
}

impl std::fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalingMode::RowFitted => "row",
            ScalingMode::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub alpha: f64,
    pub permutations: usize,
    pub seed: u64,
    pub scaling: ScalingMode,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            permutations: DEFAULT_PERMUTATIONS,
            seed: 42,
            scaling: ScalingMode::RowFitted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueCell {
    pub row: String,
    pub col: String,
    pub result: EnergyTestResult,
}

/// Ordered-pair comparison matrix. Not symmetric under row-fitted scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueMatrix {
    pub suite_ids: Vec<String>,
    pub scaling_mode: ScalingMode,
    pub alpha: f64,
    /// Off-diagonal cells in row-major order.
    pub cells: Vec<PValueCell>,
}

impl PValueMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<&EnergyTestResult> {
        self.cells
            .iter()
            .find(|c| c.row == row && c.col == col)
            .map(|c| &c.result)
    }
}

/// Seed of the `(row, col)` cell under a master seed.
pub fn cell_seed(master: u64, row: &str, col: &str) -> u64 {
    seed::derive_keyed(master, &[row, col])
}

pub fn suite_comparison_matrix(dataset: &Dataset, cfg: &CompareConfig) -> Result<PValueMatrix> {
    if dataset.suites.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "suite comparison needs at least 2 suites, got {}",
            dataset.suites.len()
        )));
    }
    if let Some(s) = dataset.suites.iter().find(|s| s.k() < 2) {
        return Err(Error::SuiteTooSmall {
            suite: s.suite_id.clone(),
            remaining: s.k(),
        });
    }
    let features: Vec<Matrix> = dataset.suites.iter().map(|s| s.features()).collect();
    let mut cells = Vec::new();
    for (i, row_suite) in dataset.suites.iter().enumerate() {
        let (row_m, scaler) = match cfg.scaling {
            ScalingMode::RowFitted => {
                let (means, scales) = fit_columns(&features[i])?;
                (
                    transform_columns(&features[i], &means, &scales)?,
                    Some((means, scales)),
                )
            }
            ScalingMode::None => (features[i].clone(), None),
        };
        for (j, col_suite) in dataset.suites.iter().enumerate() {
            if i == j {
                continue;
            }
            let col_m = match &scaler {
                Some((means, scales)) => transform_columns(&features[j], means, scales)?,
                None => features[j].clone(),
            };
            let seed = cell_seed(cfg.seed, &row_suite.suite_id, &col_suite.suite_id);
            let result = permutation_pvalue(&row_m, &col_m, cfg.permutations, seed, cfg.alpha)?;
            cells.push(PValueCell {
                row: row_suite.suite_id.clone(),
                col: col_suite.suite_id.clone(),
                result,
            });
        }
    }
    Ok(PValueMatrix {
        suite_ids: dataset.suite_ids(),
        scaling_mode: cfg.scaling,
        alpha: cfg.alpha,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_points_reduce_to_distance() {
        let e = energy_statistic(&m(&[&[0.0, 0.0]]), &m(&[&[3.0, 4.0]])).unwrap();
        assert_eq!(e, 5.0);
    }

    #[test]
    fn identical_multisets_give_zero() {
        let p = m(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 3.0]]);
        let q = m(&[&[3.0, 3.0], &[1.0, 2.0], &[0.5, -1.0]]);
        assert_eq!(energy_statistic(&p, &q).unwrap(), 0.0);
    }

    #[test]
    fn two_point_one_dimensional_case() {
        // factor 2*2/4 = 1; cross mean 1, within terms 0 -> 1 * (2 - 0 - 0)
        let e = energy_statistic(&m(&[&[0.0], &[0.0]]), &m(&[&[1.0], &[1.0]])).unwrap();
        assert_eq!(e, 2.0);
    }

    #[test]
    fn shape_and_domain_errors() {
        assert!(matches!(
            energy_statistic(&m(&[&[0.0, 1.0]]), &m(&[&[1.0]])),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            energy_statistic(&m(&[&[f64::NAN]]), &m(&[&[1.0]])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn identical_samples_have_unit_pvalue() {
        let p = m(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 3.0]]);
        let r = permutation_pvalue(&p, &p, 99, 7, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn zero_permutations_is_config_error() {
        let p = m(&[&[1.0], &[2.0]]);
        assert!(matches!(
            permutation_pvalue(&p, &p, 0, 1, 0.05),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn too_few_pooled_rows() {
        let p = m(&[&[1.0]]);
        let q = m(&[&[2.0], &[3.0]]);
        assert!(matches!(
            permutation_pvalue(&p, &q, 9, 1, 0.05),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn pvalue_is_deterministic_given_seed() {
        let p = m(&[&[0.0], &[0.3], &[1.1], &[0.7]]);
        let q = m(&[&[0.2], &[1.5], &[0.9], &[2.0]]);
        let a = permutation_pvalue(&p, &q, 99, 11, 0.05).unwrap();
        let b = permutation_pvalue(&p, &q, 99, 11, 0.05).unwrap();
        assert_eq!(a, b);
        let granules = a.p_value * 100.0;
        assert_eq!(granules, granules.round());
    }

    #[test]
    fn scaling_mode_parses() {
        assert_eq!("row".parse::<ScalingMode>().unwrap(), ScalingMode::RowFitted);
        assert_eq!("none".parse::<ScalingMode>().unwrap(), ScalingMode::None);
        assert!("col".parse::<ScalingMode>().is_err());
    }
}
