//! Feature and performance tables for a collection of benchmark suites.
//!
//! Feature CSV header: `instance_id,suite_id,dimensionality,<feature_1>,...`.
//! Empty cells and `NA` are missing values. Performance CSV header:
//! `instance_id,suite_id,algorithm_id,median_target_precision`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const FEATURE_ID_COLUMNS: [&str; 3] = ["instance_id", "suite_id", "dimensionality"];
const PERFORMANCE_COLUMNS: [&str; 4] = [
    "instance_id",
    "suite_id",
    "algorithm_id",
    "median_target_precision",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub suite_id: String,
    pub dimensionality: u32,
    /// Missing cells are stored as NaN until validation removes the row.
    pub features: Vec<f64>,
}

impl InstanceRecord {
    pub fn is_complete(&self) -> bool {
        self.features.iter().all(|v| v.is_finite())
    }

    fn incompleteness(&self, names: &[String]) -> Option<String> {
        let mut missing = Vec::new();
        let mut non_finite = Vec::new();
        for (name, v) in names.iter().zip(&self.features) {
            if v.is_nan() {
                missing.push(name.as_str());
            } else if v.is_infinite() {
                non_finite.push(name.as_str());
            }
        }
        match (missing.is_empty(), non_finite.is_empty()) {
            (true, true) => None,
            (false, true) => Some(format!("missing: {}", missing.join(";"))),
            (true, false) => Some(format!("non-finite: {}", non_finite.join(";"))),
            (false, false) => Some(format!(
                "missing: {}; non-finite: {}",
                missing.join(";"),
                non_finite.join(";")
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteMatrix {
    pub suite_id: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<InstanceRecord>,
}

impl SuiteMatrix {
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.feature_names.len()
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.instance_id.as_str())
    }

    /// Feature values as a `k x n` matrix in row order.
    pub fn features(&self) -> Matrix {
        let mut m = Matrix::zeros(self.k(), self.n());
        for (i, r) in self.rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&r.features);
        }
        m
    }

    /// Same rows and ids with the feature values replaced.
    pub fn with_features(&self, m: &Matrix) -> Result<SuiteMatrix> {
        if m.nrows() != self.k() || m.ncols() != self.n() {
            return Err(Error::Shape(format!(
                "suite `{}` is {}x{}, replacement matrix is {}x{}",
                self.suite_id,
                self.k(),
                self.n(),
                m.nrows(),
                m.ncols()
            )));
        }
        let rows = self
            .rows
            .iter()
            .zip(m.rows())
            .map(|(r, values)| InstanceRecord {
                features: values.to_vec(),
                ..r.clone()
            })
            .collect();
        Ok(SuiteMatrix {
            suite_id: self.suite_id.clone(),
            feature_names: self.feature_names.clone(),
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub instance_id: String,
    pub suite_id: String,
    pub algorithm_id: String,
    pub median_target_precision: f64,
    /// Filled by [`crate::preprocess::log_transform_targets`].
    pub log_target: Option<f64>,
}

/// Suites in order of first appearance, plus performance records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub suites: Vec<SuiteMatrix>,
    pub performance: Vec<PerformanceRecord>,
    pub algorithms: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Cell contents (after trimming) treated as missing.
    pub missing_markers: Vec<String>,
    pub delimiter: u8,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            missing_markers: vec![String::new(), "NA".to_string()],
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedInstance {
    pub instance_id: String,
    pub suite_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub dropped: Vec<DroppedInstance>,
}

impl DropReport {
    pub fn is_empty(&self) -> bool {
        self.dropped.is_empty()
    }
}

impl Dataset {
    pub fn suite(&self, suite_id: &str) -> Option<&SuiteMatrix> {
        self.suites.iter().find(|s| s.suite_id == suite_id)
    }

    pub fn suite_ids(&self) -> Vec<String> {
        self.suites.iter().map(|s| s.suite_id.clone()).collect()
    }

    /// Instances carrying a missing or non-finite feature value.
    pub fn incomplete_instances(&self) -> Vec<(String, String)> {
        self.suites
            .iter()
            .flat_map(|s| s.rows.iter())
            .filter(|r| !r.is_complete())
            .map(|r| (r.suite_id.clone(), r.instance_id.clone()))
            .collect()
    }

    /// Adds suites from another feature file. Feature columns must match
    /// exactly, in the same order.
    pub fn merge(&mut self, other: Dataset) -> Result<()> {
        if self.suites.is_empty() && self.feature_names.is_empty() {
            *self = other;
            return Ok(());
        }
        if self.feature_names != other.feature_names {
            return Err(Error::Schema(format!(
                "feature columns differ between inputs: [{}] vs [{}]",
                self.feature_names.join(","),
                other.feature_names.join(",")
            )));
        }
        for suite in other.suites {
            match self.suites.iter_mut().find(|s| s.suite_id == suite.suite_id) {
                Some(existing) => {
                    let seen: HashSet<&str> = existing.instance_ids().collect();
                    if let Some(dup) = suite
                        .rows
                        .iter()
                        .find(|r| seen.contains(r.instance_id.as_str()))
                    {
                        return Err(Error::Integrity(format!(
                            "duplicate instance `{}` in suite `{}`",
                            dup.instance_id, dup.suite_id
                        )));
                    }
                    existing.rows.extend(suite.rows);
                }
                None => self.suites.push(suite),
            }
        }
        let perf = other.performance;
        self.attach_performance(perf)
    }

    /// Appends performance records after checking that each joins to exactly
    /// one feature row and that no (instance, suite, algorithm) repeats.
    pub fn attach_performance(&mut self, records: Vec<PerformanceRecord>) -> Result<()> {
        let known: HashSet<(&str, &str)> = self
            .suites
            .iter()
            .flat_map(|s| s.rows.iter())
            .map(|r| (r.suite_id.as_str(), r.instance_id.as_str()))
            .collect();
        let mut seen: HashSet<(String, String, String)> = self
            .performance
            .iter()
            .map(|p| {
                (
                    p.suite_id.clone(),
                    p.instance_id.clone(),
                    p.algorithm_id.clone(),
                )
            })
            .collect();
        for rec in &records {
            if !known.contains(&(rec.suite_id.as_str(), rec.instance_id.as_str())) {
                return Err(Error::Integrity(format!(
                    "performance record for instance `{}` of suite `{}` has no feature row",
                    rec.instance_id, rec.suite_id
                )));
            }
            let key = (
                rec.suite_id.clone(),
                rec.instance_id.clone(),
                rec.algorithm_id.clone(),
            );
            if !seen.insert(key) {
                return Err(Error::Integrity(format!(
                    "duplicate performance record for instance `{}` of suite `{}`, algorithm `{}`",
                    rec.instance_id, rec.suite_id, rec.algorithm_id
                )));
            }
        }
        self.algorithms
            .extend(records.iter().map(|r| r.algorithm_id.clone()));
        self.performance.extend(records);
        Ok(())
    }

    /// Performance records of one algorithm for one suite, keyed by instance.
    pub fn performance_for<'a>(
        &'a self,
        algorithm_id: &str,
        suite_id: &str,
    ) -> HashMap<&'a str, &'a PerformanceRecord> {
        self.performance
            .iter()
            .filter(|p| p.algorithm_id == algorithm_id && p.suite_id == suite_id)
            .map(|p| (p.instance_id.as_str(), p))
            .collect()
    }

    /// Precision values of one algorithm aligned with the suite's row order.
    /// Every instance in the suite must have a record.
    pub fn aligned_precisions(&self, algorithm_id: &str, suite_id: &str) -> Result<Vec<f64>> {
        let suite = self
            .suite(suite_id)
            .ok_or_else(|| Error::UnknownSuite(suite_id.to_string()))?;
        let by_instance = self.performance_for(algorithm_id, suite_id);
        if by_instance.is_empty() {
            return Err(Error::Coverage {
                algorithm: algorithm_id.to_string(),
                suite: suite_id.to_string(),
                detail: "no performance records".to_string(),
            });
        }
        suite
            .rows
            .iter()
            .map(|r| {
                by_instance
                    .get(r.instance_id.as_str())
                    .map(|p| p.median_target_precision)
                    .ok_or_else(|| Error::Coverage {
                        algorithm: algorithm_id.to_string(),
                        suite: suite_id.to_string(),
                        detail: format!("instance `{}` has no record", r.instance_id),
                    })
            })
            .collect()
    }
}

fn open_csv(path: &Path, delimiter: u8) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(file))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_error(path, line, format!("{kind:?}")),
    }
}

fn read_header(path: &Path, reader: &mut csv::Reader<std::fs::File>) -> Result<Vec<String>> {
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    Ok(header.iter().map(|h| h.trim().to_string()).collect())
}

/// Reads a feature CSV. Rows keep file order; suites appear in order of first
/// occurrence. Missing cells are kept as NaN so validation can report them.
pub fn load_features(path: impl AsRef<Path>, config: &IngestConfig) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = open_csv(path, config.delimiter)?;
    let header = read_header(path, &mut reader)?;
    if header.len() < FEATURE_ID_COLUMNS.len() + 1
        || header[..FEATURE_ID_COLUMNS.len()] != FEATURE_ID_COLUMNS
    {
        return Err(Error::Schema(format!(
            "{}: header must start with `{}` followed by at least one feature column",
            path.display(),
            FEATURE_ID_COLUMNS.join(",")
        )));
    }
    let feature_names: Vec<String> = header[FEATURE_ID_COLUMNS.len()..].to_vec();
    {
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Schema(format!(
                "{}: feature column `{dup}` appears twice",
                path.display()
            )));
        }
    }

    let mut suites: Vec<SuiteMatrix> = Vec::new();
    let mut suite_index: HashMap<String, usize> = HashMap::new();
    let mut keys: HashSet<(String, String)> = HashSet::new();

    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Schema(format!(
                "{}:{line}: row has {} columns, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let instance_id = record[0].trim().to_string();
        let suite_id = record[1].trim().to_string();
        if instance_id.is_empty() || suite_id.is_empty() {
            return Err(parse_error(path, line, "empty instance_id or suite_id"));
        }
        let dimensionality: u32 = record[2]
            .trim()
            .parse()
            .ok()
            .filter(|d| *d > 0)
            .ok_or_else(|| {
                parse_error(
                    path,
                    line,
                    format!("dimensionality `{}` is not a positive integer", &record[2]),
                )
            })?;
        let mut features = Vec::with_capacity(feature_names.len());
        for (cell, name) in record.iter().skip(3).zip(&feature_names) {
            let cell = cell.trim();
            if config.missing_markers.iter().any(|m| m == cell) {
                features.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_error(path, line, format!("feature `{name}`: cannot parse `{cell}`"))
                })?;
                features.push(v);
            }
        }
        if !keys.insert((suite_id.clone(), instance_id.clone())) {
            return Err(Error::Integrity(format!(
                "{}:{line}: duplicate instance `{instance_id}` in suite `{suite_id}`",
                path.display()
            )));
        }
        let idx = *suite_index.entry(suite_id.clone()).or_insert_with(|| {
            suites.push(SuiteMatrix {
                suite_id: suite_id.clone(),
                feature_names: feature_names.clone(),
                rows: Vec::new(),
            });
            suites.len() - 1
        });
        suites[idx].rows.push(InstanceRecord {
            instance_id,
            suite_id,
            dimensionality,
            features,
        });
    }

    Ok(Dataset {
        feature_names,
        suites,
        performance: Vec::new(),
        algorithms: BTreeSet::new(),
    })
}

/// Reads a performance CSV in file order.
pub fn load_performance(path: impl AsRef<Path>) -> Result<Vec<PerformanceRecord>> {
    let path = path.as_ref();
    let mut reader = open_csv(path, b',')?;
    let header = read_header(path, &mut reader)?;
    if header != PERFORMANCE_COLUMNS {
        return Err(Error::Schema(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            PERFORMANCE_COLUMNS.join(","),
            header.join(",")
        )));
    }
    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Schema(format!(
                "{}:{line}: row has {} columns, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let cell = record[3].trim();
        let precision: f64 = cell.parse().map_err(|_| {
            parse_error(
                path,
                line,
                format!("median_target_precision: cannot parse `{cell}`"),
            )
        })?;
        if precision.is_nan() || precision < 0.0 {
            return Err(Error::Domain(format!(
                "{}:{line}: median_target_precision must be a nonnegative number, got {cell}",
                path.display()
            )));
        }
        out.push(PerformanceRecord {
            instance_id: record[0].trim().to_string(),
            suite_id: record[1].trim().to_string(),
            algorithm_id: record[2].trim().to_string(),
            median_target_precision: precision,
            log_target: None,
        });
    }
    Ok(out)
}

/// Removes every instance with a missing or non-finite feature, together
/// with its performance records. Fails if any suite ends up with fewer than
/// two instances.
pub fn validate_and_drop_incomplete(dataset: Dataset) -> Result<(Dataset, DropReport)> {
    let Dataset {
        feature_names,
        suites,
        performance,
        algorithms,
    } = dataset;
    let mut report = DropReport::default();
    let mut dropped_keys: HashSet<(String, String)> = HashSet::new();
    let mut kept_suites = Vec::with_capacity(suites.len());

    for mut suite in suites {
        suite.rows.retain(|r| match r.incompleteness(&feature_names) {
            None => true,
            Some(reason) => {
                dropped_keys.insert((r.suite_id.clone(), r.instance_id.clone()));
                report.dropped.push(DroppedInstance {
                    instance_id: r.instance_id.clone(),
                    suite_id: r.suite_id.clone(),
                    reason,
                });
                false
            }
        });
        if suite.k() < 2 {
            return Err(Error::SuiteTooSmall {
                suite: suite.suite_id,
                remaining: suite.rows.len(),
            });
        }
        kept_suites.push(suite);
    }

    let performance: Vec<PerformanceRecord> = performance
        .into_iter()
        .filter(|p| !dropped_keys.contains(&(p.suite_id.clone(), p.instance_id.clone())))
        .collect();
    let algorithms = if dropped_keys.is_empty() {
        algorithms
    } else {
        performance.iter().map(|p| p.algorithm_id.clone()).collect()
    };

    Ok((
        Dataset {
            feature_names,
            suites: kept_suites,
            performance,
            algorithms,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const FIVE_ROWS: &str = "\
instance_id,suite_id,dimensionality,f1,f2,f3
a,S1,10,1.0,2.0,3.0
b,S1,10,1.5,2.5,3.5
c,S1,10,0.5,1.5,2.5
x,S2,10,4,5,6
y,S2,10,4.5,5.5,6.5
";

    #[test]
    fn groups_rows_by_suite() {
        let f = write_tmp(FIVE_ROWS);
        let ds = load_features(f.path(), &IngestConfig::default()).unwrap();
        assert_eq!(ds.suites.len(), 2);
        assert_eq!(ds.suite("S1").unwrap().k(), 3);
        assert_eq!(ds.suite("S2").unwrap().k(), 2);
        assert!(ds.suites.iter().all(|s| s.n() == 3));
        let ids: Vec<_> = ds.suite("S1").unwrap().instance_ids().collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn missing_cells_are_flagged() {
        let f = write_tmp(
            "instance_id,suite_id,dimensionality,f1,f2\na,S,5,1,\nb,S,5,NA,2\nc,S,5,1,2\n",
        );
        let ds = load_features(f.path(), &IngestConfig::default()).unwrap();
        let incomplete = ds.incomplete_instances();
        assert_eq!(
            incomplete,
            vec![
                ("S".to_string(), "a".to_string()),
                ("S".to_string(), "b".to_string())
            ]
        );
    }

    #[test]
    fn duplicate_key_is_integrity_error() {
        let f = write_tmp("instance_id,suite_id,dimensionality,f1\na,S,5,1\na,S,5,2\n");
        let err = load_features(f.path(), &IngestConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err}");
    }

    #[test]
    fn ragged_row_is_schema_error() {
        let f = write_tmp("instance_id,suite_id,dimensionality,f1,f2\na,S,5,1\n");
        let err = load_features(f.path(), &IngestConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn unparsable_cell_reports_line() {
        let f = write_tmp("instance_id,suite_id,dimensionality,f1\na,S,5,1\nb,S,5,abc\n");
        let err = load_features(f.path(), &IngestConfig::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_header_is_schema_error() {
        let f = write_tmp("id,suite,dimensionality,f1\na,S,5,1\n");
        assert!(matches!(
            load_features(f.path(), &IngestConfig::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn performance_rows_parse() {
        let f = write_tmp(
            "instance_id,suite_id,algorithm_id,median_target_precision\n\
             a,S,DE,1e-8\nb,S,DE,0.5\nc,S,DE,12\n",
        );
        let recs = load_performance(f.path()).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.algorithm_id == "DE"));
        assert_eq!(recs[0].median_target_precision, 1e-8);
    }

    #[test]
    fn negative_precision_is_domain_error() {
        let f = write_tmp(
            "instance_id,suite_id,algorithm_id,median_target_precision\na,S,DE,-1\n",
        );
        assert!(matches!(load_performance(f.path()), Err(Error::Domain(_))));
    }

    #[test]
    fn unknown_performance_column_is_schema_error() {
        let f = write_tmp(
            "instance_id,suite_id,algorithm_id,median_target_precision,extra\na,S,DE,1,2\n",
        );
        assert!(matches!(load_performance(f.path()), Err(Error::Schema(_))));
    }

    fn suite_with(suite: &str, rows: &[(&str, Vec<f64>)]) -> SuiteMatrix {
        SuiteMatrix {
            suite_id: suite.into(),
            feature_names: vec!["f1".into(), "f2".into()],
            rows: rows
                .iter()
                .map(|(id, f)| InstanceRecord {
                    instance_id: (*id).into(),
                    suite_id: suite.into(),
                    dimensionality: 10,
                    features: f.clone(),
                })
                .collect(),
        }
    }

    #[test]
    fn drops_incomplete_instances_everywhere() {
        let rows: Vec<(String, Vec<f64>)> = (0..30)
            .map(|i| {
                let v = if [2, 6, 19].contains(&i) {
                    vec![f64::NAN, 1.0]
                } else {
                    vec![i as f64, 1.0]
                };
                (format!("p{}", i + 1), v)
            })
            .collect();
        let rows: Vec<(&str, Vec<f64>)> = rows.iter().map(|(a, b)| (a.as_str(), b.clone())).collect();
        let mut ds = Dataset {
            feature_names: vec!["f1".into(), "f2".into()],
            suites: vec![suite_with("CEC", &rows)],
            ..Default::default()
        };
        let perf = (1..=30)
            .map(|i| PerformanceRecord {
                instance_id: format!("p{i}"),
                suite_id: "CEC".into(),
                algorithm_id: "DE".into(),
                median_target_precision: 1.0,
                log_target: None,
            })
            .collect();
        ds.attach_performance(perf).unwrap();
        let (clean, report) = validate_and_drop_incomplete(ds).unwrap();
        assert_eq!(clean.suites[0].k(), 27);
        assert_eq!(clean.performance.len(), 27);
        let dropped: Vec<_> = report.dropped.iter().map(|d| d.instance_id.as_str()).collect();
        assert_eq!(dropped, ["p3", "p7", "p20"]);
        assert!(report.dropped[0].reason.starts_with("missing"));
    }

    #[test]
    fn complete_dataset_is_unchanged() {
        let ds = Dataset {
            feature_names: vec!["f1".into(), "f2".into()],
            suites: vec![suite_with("S", &[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])])],
            ..Default::default()
        };
        let (clean, report) = validate_and_drop_incomplete(ds.clone()).unwrap();
        assert_eq!(clean, ds);
        assert!(report.is_empty());
    }

    #[test]
    fn suite_left_too_small_errors() {
        let ds = Dataset {
            feature_names: vec!["f1".into(), "f2".into()],
            suites: vec![suite_with(
                "tiny",
                &[("a", vec![1.0, 2.0]), ("b", vec![f64::INFINITY, 4.0])],
            )],
            ..Default::default()
        };
        match validate_and_drop_incomplete(ds) {
            Err(Error::SuiteTooSmall { suite, remaining }) => {
                assert_eq!(suite, "tiny");
                assert_eq!(remaining, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orphan_performance_record_is_rejected() {
        let mut ds = Dataset {
            feature_names: vec!["f1".into(), "f2".into()],
            suites: vec![suite_with("S", &[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])])],
            ..Default::default()
        };
        let err = ds
            .attach_performance(vec![PerformanceRecord {
                instance_id: "zzz".into(),
                suite_id: "S".into(),
                algorithm_id: "DE".into(),
                median_target_precision: 1.0,
                log_target: None,
            }])
            .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn merge_rejects_reordered_features() {
        let mut a = Dataset {
            feature_names: vec!["f1".into(), "f2".into()],
            suites: vec![suite_with("A", &[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])])],
            ..Default::default()
        };
        let mut other = suite_with("B", &[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])]);
        other.feature_names = vec!["f2".into(), "f1".into()];
        let b = Dataset {
            feature_names: other.feature_names.clone(),
            suites: vec![other],
            ..Default::default()
        };
        assert!(matches!(a.merge(b), Err(Error::Schema(_))));
    }
}
