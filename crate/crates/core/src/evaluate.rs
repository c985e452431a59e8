//! Cross-suite train/test evaluation of performance-prediction forests.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestConfig, ForestModel};
use crate::matrix::Matrix;
use crate::numeric::median;
use crate::preprocess::{fit_columns, transform_columns, LogTargetConfig};
use crate::seed;
use crate::similarity::PValueMatrix;

pub const DEFAULT_BAND: f64 = 3.0;

/// Median absolute error; even lengths use the mean of the two middle values.
pub fn mdae(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    Ok(median(&abs_errors(predictions, truths)?).expect("nonempty"))
}

pub fn abs_errors(predictions: &[f64], truths: &[f64]) -> Result<Vec<f64>> {
    if predictions.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Shape("MDAE of an empty sample".into()));
    }
    Ok(predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t).abs())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCell {
    pub train: String,
    pub test: String,
    pub mdae: f64,
    pub instance_ids: Vec<String>,
    pub abs_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMatrix {
    pub algorithm_id: String,
    pub train_suites: Vec<String>,
    /// Off-diagonal cells, train-major.
    pub cells: Vec<ErrorCell>,
    /// Resubstitution error of each suite's model on its own data; `train`
    /// and `test` are the same suite.
    pub training: Vec<ErrorCell>,
}

impl ErrorMatrix {
    pub fn cell(&self, train: &str, test: &str) -> Option<&ErrorCell> {
        self.cells
            .iter()
            .find(|c| c.train == train && c.test == test)
    }

    pub fn training_error(&self, suite: &str) -> Option<&ErrorCell> {
        self.training.iter().find(|c| c.train == suite)
    }
}

/// Everything produced while evaluating one algorithm, including the fitted
/// models (one per training suite, in suite order).
pub struct Evaluation {
    pub errors: ErrorMatrix,
    pub models: Vec<(String, ForestModel)>,
}

/// Seed of the forest trained for `(algorithm, train suite)`.
pub fn forest_seed(master: u64, algorithm_id: &str, train_suite: &str) -> u64 {
    seed::derive_keyed(master, &["forest", algorithm_id, train_suite])
}

pub fn cross_suite_evaluate(
    dataset: &Dataset,
    algorithm_id: &str,
    forest_cfg: &ForestConfig,
    log_cfg: &LogTargetConfig,
) -> Result<ErrorMatrix> {
    Ok(cross_suite_evaluate_with_models(dataset, algorithm_id, forest_cfg, log_cfg)?.errors)
}

/// For each training suite: standardize with parameters fitted on it, fit a
/// forest on its log targets, record the resubstitution error, then predict
/// every other suite after applying the same standardization.
pub fn cross_suite_evaluate_with_models(
    dataset: &Dataset,
    algorithm_id: &str,
    forest_cfg: &ForestConfig,
    log_cfg: &LogTargetConfig,
) -> Result<Evaluation> {
    log_cfg.validate()?;
    forest_cfg.validate()?;
    if dataset.suites.len() < 2 {
        return Err(Error::InsufficientData(
            "cross-suite evaluation needs at least 2 suites".into(),
        ));
    }
    let features: Vec<Matrix> = dataset.suites.iter().map(|s| s.features()).collect();
    let targets: Vec<Vec<f64>> = dataset
        .suites
        .iter()
        .map(|s| {
            Ok(dataset
                .aligned_precisions(algorithm_id, &s.suite_id)?
                .into_iter()
                .map(|p| log_cfg.apply(p))
                .collect())
        })
        .collect::<Result<_>>()?;
    let ids: Vec<Vec<String>> = dataset
        .suites
        .iter()
        .map(|s| s.instance_ids().map(String::from).collect())
        .collect();

    let per_train: Vec<Result<(ErrorCell, Vec<ErrorCell>, ForestModel)>> = {
        use rayon::prelude::*;
        (0..dataset.suites.len())
            .into_par_iter()
            .map(|i| {
                let train_id = &dataset.suites[i].suite_id;
                let (means, scales) = fit_columns(&features[i])?;
                let x_train = transform_columns(&features[i], &means, &scales)?;
                let cfg = ForestConfig {
                    seed: forest_seed(forest_cfg.seed, algorithm_id, train_id),
                    ..*forest_cfg
                };
                let model = fit_forest(&x_train, &targets[i], &cfg)?;
                let resub = abs_errors(&model.predict(&x_train)?, &targets[i])?;
                let training = ErrorCell {
                    train: train_id.clone(),
                    test: train_id.clone(),
                    mdae: median(&resub).expect("nonempty"),
                    instance_ids: ids[i].clone(),
                    abs_errors: resub,
                };
                let mut cells = Vec::new();
                for (j, test) in dataset.suites.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let x_test = transform_columns(&features[j], &means, &scales)?;
                    let errs = abs_errors(&model.predict(&x_test)?, &targets[j])?;
                    cells.push(ErrorCell {
                        train: train_id.clone(),
                        test: test.suite_id.clone(),
                        mdae: median(&errs).expect("nonempty"),
                        instance_ids: ids[j].clone(),
                        abs_errors: errs,
                    });
                }
                Ok((training, cells, model))
            })
            .collect()
    };

    let mut training = Vec::new();
    let mut cells = Vec::new();
    let mut models = Vec::new();
    for (suite, r) in dataset.suites.iter().zip(per_train) {
        let (t, c, m) = r?;
        training.push(t);
        cells.extend(c);
        models.push((suite.suite_id.clone(), m));
    }
    Ok(Evaluation {
        errors: ErrorMatrix {
            algorithm_id: algorithm_id.to_string(),
            train_suites: dataset.suite_ids(),
            cells,
            training,
        },
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEntry {
    pub train: String,
    pub test: String,
    pub p_value: f64,
    pub significant: bool,
    pub mdae: f64,
    pub training_mdae: f64,
    /// `mdae / training_mdae`; absent when the training error is zero.
    pub ratio: Option<f64>,
    /// `mdae <= band * training_mdae`.
    pub within_band: bool,
    /// Non-significant and within the band, or significant and outside it.
    pub agreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub pairs: usize,
    pub agreeing: usize,
    pub disagreeing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub algorithm_id: String,
    pub band: f64,
    pub alpha: f64,
    pub entries: Vec<AlignmentEntry>,
    pub summary: AlignmentSummary,
}

pub fn alignment_report(
    pmatrix: &PValueMatrix,
    ematrix: &ErrorMatrix,
    band: f64,
) -> Result<AlignmentReport> {
    if !(band > 0.0 && band.is_finite()) {
        return Err(Error::Config(format!("band must be positive, got {band}")));
    }
    let mut a = pmatrix.suite_ids.clone();
    let mut b = ematrix.train_suites.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::Schema(format!(
            "p-value matrix suites [{}] differ from error matrix suites [{}]",
            pmatrix.suite_ids.join(","),
            ematrix.train_suites.join(",")
        )));
    }
    let mut entries = Vec::with_capacity(ematrix.cells.len());
    for cell in &ematrix.cells {
        let p = pmatrix.get(&cell.train, &cell.test).ok_or_else(|| {
            Error::Schema(format!(
                "p-value matrix lacks cell ({}, {})",
                cell.train, cell.test
            ))
        })?;
        let training_mdae = ematrix
            .training_error(&cell.train)
            .ok_or_else(|| Error::Schema(format!("no training error for `{}`", cell.train)))?
            .mdae;
        let within_band = cell.mdae <= band * training_mdae;
        let significant = p.p_value <= pmatrix.alpha;
        entries.push(AlignmentEntry {
            train: cell.train.clone(),
            test: cell.test.clone(),
            p_value: p.p_value,
            significant,
            mdae: cell.mdae,
            training_mdae,
            ratio: (training_mdae > 0.0).then(|| cell.mdae / training_mdae),
            within_band,
            agreement: significant != within_band,
        });
    }
    let agreeing = entries.iter().filter(|e| e.agreement).count();
    Ok(AlignmentReport {
        algorithm_id: ematrix.algorithm_id.clone(),
        band,
        alpha: pmatrix.alpha,
        summary: AlignmentSummary {
            pairs: entries.len(),
            agreeing,
            disagreeing: entries.len() - agreeing,
        },
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledErrors {
    pub label: String,
    pub train_suite: String,
    pub eval_suite: String,
    pub is_training: bool,
    pub abs_errors: Vec<f64>,
}

/// Training absolute errors for `train_suite` followed by its test errors on
/// every other suite.
pub fn boxplot_data(ematrix: &ErrorMatrix, train_suite: &str) -> Result<Vec<LabeledErrors>> {
    let training = ematrix
        .training_error(train_suite)
        .ok_or_else(|| Error::UnknownSuite(train_suite.to_string()))?;
    let mut out = vec![LabeledErrors {
        label: format!("{train_suite} (train)"),
        train_suite: train_suite.to_string(),
        eval_suite: train_suite.to_string(),
        is_training: true,
        abs_errors: training.abs_errors.clone(),
    }];
    out.extend(
        ematrix
            .cells
            .iter()
            .filter(|c| c.train == train_suite)
            .map(|c| LabeledErrors {
                label: c.test.clone(),
                train_suite: train_suite.to_string(),
                eval_suite: c.test.clone(),
                is_training: false,
                abs_errors: c.abs_errors.clone(),
            }),
    );
    Ok(out)
}
