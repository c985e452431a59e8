//! Data files behind tables and figures, plus the run manifest.
//!
//! Everything here is plain CSV or JSON so any plotting tool can render it.
//! Output is deterministic for a given input; wall-clock timing appears only
//! in the manifest.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::DropReport;
use crate::error::{Error, Result};
use crate::evaluate::ErrorMatrix;
use crate::ks::KsMatrix;
use crate::selector::{OverlapReport, SelectionResult};
use crate::similarity::PValueMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub row_suite: String,
    pub col_suite: String,
    pub value: f64,
    pub annotation: String,
}

/// Long-format heatmap CSV: `row_suite,col_suite,value,annotation`.
pub fn emit_heatmap_data(rows: &[HeatmapRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(path.as_ref(), &["row_suite", "col_suite", "value", "annotation"])?;
    for r in rows {
        w.row(&[
            r.row_suite.clone(),
            r.col_suite.clone(),
            fmt_f64(r.value),
            r.annotation.clone(),
        ])?;
    }
    w.finish()
}

/// Cells marked `*` when significant at the matrix's alpha.
pub fn pvalue_heatmap(m: &PValueMatrix) -> Vec<HeatmapRow> {
    m.cells
        .iter()
        .map(|c| HeatmapRow {
            row_suite: c.row.clone(),
            col_suite: c.col.clone(),
            value: c.result.p_value,
            annotation: if c.result.p_value <= m.alpha { "*".into() } else { String::new() },
        })
        .collect()
}

pub fn ks_heatmap(m: &KsMatrix) -> Vec<HeatmapRow> {
    m.cells
        .iter()
        .map(|c| HeatmapRow {
            row_suite: c.row.clone(),
            col_suite: c.col.clone(),
            value: c.result.p_value,
            annotation: if c.result.significant { "*".into() } else { String::new() },
        })
        .collect()
}

pub fn mdae_heatmap(m: &ErrorMatrix) -> Vec<HeatmapRow> {
    m.cells
        .iter()
        .map(|c| HeatmapRow {
            row_suite: c.train.clone(),
            col_suite: c.test.clone(),
            value: c.mdae,
            annotation: String::new(),
        })
        .collect()
}

/// Shortest representation that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) struct CsvOut {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub(crate) fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        inner
            .write_record(header)
            .map_err(|e| csv_to_io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub(crate) fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        self.inner
            .write_record(fields)
            .map_err(|e| csv_to_io(&self.path, e))
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn csv_to_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_drop_report(report: &DropReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(path.as_ref(), &["instance_id", "suite_id", "reason"])?;
    for d in &report.dropped {
        w.row(&[&d.instance_id, &d.suite_id, &d.reason])?;
    }
    w.finish()
}

pub fn write_pvalue_csv(m: &PValueMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(
        path.as_ref(),
        &["row_suite", "col_suite", "statistic", "p_value", "significant", "permutations", "seed"],
    )?;
    for c in &m.cells {
        w.row(&[
            c.row.clone(),
            c.col.clone(),
            fmt_f64(c.result.statistic),
            fmt_f64(c.result.p_value),
            c.result.significant.to_string(),
            c.result.permutations.to_string(),
            c.result.seed.to_string(),
        ])?;
    }
    w.finish()
}

pub fn write_ks_csv(m: &KsMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(
        path.as_ref(),
        &["algorithm_id", "row_suite", "col_suite", "statistic_d", "p_value", "significant", "n", "m"],
    )?;
    for c in &m.cells {
        w.row(&[
            m.algorithm_id.clone(),
            c.row.clone(),
            c.col.clone(),
            fmt_f64(c.result.statistic_d),
            fmt_f64(c.result.p_value),
            c.result.significant.to_string(),
            c.result.n.to_string(),
            c.result.m.to_string(),
        ])?;
    }
    w.finish()
}

pub fn write_training_errors(matrices: &[&ErrorMatrix], path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(path.as_ref(), &["algorithm_id", "suite", "mdae"])?;
    for m in matrices {
        for t in &m.training {
            w.row(&[m.algorithm_id.clone(), t.train.clone(), fmt_f64(t.mdae)])?;
        }
    }
    w.finish()
}

/// Long format `train_suite,eval_suite,instance_id,abs_error`; training
/// rows first for each train suite.
pub fn write_abs_errors(m: &ErrorMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(
        path.as_ref(),
        &["train_suite", "eval_suite", "instance_id", "abs_error"],
    )?;
    for train in &m.train_suites {
        let own = m.training.iter().filter(|c| &c.train == train);
        let others = m.cells.iter().filter(|c| &c.train == train);
        for c in own.chain(others) {
            for (id, e) in c.instance_ids.iter().zip(&c.abs_errors) {
                w.row(&[c.train.clone(), c.test.clone(), id.clone(), fmt_f64(*e)])?;
            }
        }
    }
    w.finish()
}

pub fn write_selection(results: &[SelectionResult], path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(path.as_ref(), &["suite_label", "seed", "instance_key"])?;
    for r in results {
        for key in &r.selected {
            w.row(&[r.suite_label.clone(), r.seed.to_string(), key.clone()])?;
        }
    }
    w.finish()
}

pub fn write_overlap(report: &OverlapReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = CsvOut::create(path.as_ref(), &["suite_a", "suite_b", "shared"])?;
    for p in &report.pairs {
        w.row(&[p.suite_a.clone(), p.suite_b.clone(), p.shared.to_string()])?;
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_file(path: impl AsRef<Path>) -> Result<InputDigest> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub elapsed_ms: u128,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
}

/// Exclusive writer for an output directory. Holds a lock file for its
/// lifetime and records every file written through it.
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
    written: Vec<String>,
}

pub const LOCK_FILE: &str = ".suitegauge.lock";

impl OutputDir {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Error::Config(format!(
                    "output directory {} is in use (remove {} if no other run is active)",
                    root.display(),
                    lock.display()
                )));
            }
            Err(e) => return Err(Error::io(&lock, e)),
        }
        Ok(Self {
            root,
            lock,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for a new output file, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock);
    }
}

/// Replaces characters that are awkward in file names.
pub fn file_token(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
