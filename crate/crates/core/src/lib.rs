//! Statistical similarity between optimization benchmark suites.
//!
//! Each suite is a matrix of problem instances described by a shared set of
//! landscape meta-features. The crate compares suites with the multivariate
//! energy two-sample test, trains regression forests that predict algorithm
//! performance from those features, and checks whether feature-space
//! similarity lines up with how well a model trained on one suite transfers
//! to another.
//!
//! Module map:
//!
//! - [`data`]: CSV ingestion, validation and missing-data handling.
//! - [`preprocess`]: train-fitted standardization and log-space targets.
//! - [`similarity`]: energy statistic, permutation p-values, suite matrices.
//! - [`ks`]: two-sample Kolmogorov–Smirnov tests on performance data.
//! - [`selector`]: cosine-similarity graphs and maximal independent sets.
//! - [`forest`]: CART regression forests.
//! - [`evaluate`]: cross-suite error matrices and alignment reports.
//! - [`report`] and [`cli`]: file outputs and the command-line front end.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod forest;
pub mod ks;
pub mod matrix;
pub mod numeric;
pub mod preprocess;
pub mod report;
pub mod seed;
pub mod selector;
pub mod similarity;

pub use error::{Error, Result};
pub use matrix::Matrix;
