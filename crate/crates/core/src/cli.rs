//! Command-line front end.
//!
//! Settings resolve as: command-line flags, then the `--config` file (flat
//! `key = value` lines, `#` comments), then built-in defaults. The seed
//! additionally falls back to `SUITEGAUGE_SEED` before the default. Exit
//! status is 0 on success, 1 on data errors and 2 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{self, Dataset, IngestConfig, InstanceRecord};
use crate::error::{Error, Result};
use crate::evaluate::{self, alignment_report, ErrorMatrix, DEFAULT_BAND};
use crate::forest::ForestConfig;
use crate::ks::{performance_ks_matrix, TargetSpace};
use crate::matrix::Matrix;
use crate::preprocess::{fit_columns, transform_columns, LogTargetConfig};
use crate::report::{self, file_token, OutputDir, RunManifest};
use crate::selector::{self, SimilarityGraph, DEFAULT_THRESHOLD};
use crate::similarity::{
    suite_comparison_matrix, CompareConfig, PValueMatrix, ScalingMode, DEFAULT_ALPHA,
    DEFAULT_PERMUTATIONS,
};

pub const SEED_ENV: &str = "SUITEGAUGE_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "suitegauge-out";
pub const PVALUES_FILE: &str = "feature_pvalues.json";

#[derive(Debug, Parser)]
#[command(name = "suitegauge", version, about = "Benchmark-suite similarity and cross-suite generalization of performance predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load inputs, drop instances with missing features, write a drop report.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Energy-test p-values for every ordered pair of suites.
    CompareFeatures {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        test: TestArgs,
    },
    /// Kolmogorov-Smirnov tests of one algorithm's performance across suites.
    ComparePerformance {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        algo: AlgorithmArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// Test raw precision values instead of log-space targets.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        log: LogArgs,
    },
    /// Sample diverse sub-suites with a cosine-similarity graph and MIS.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        /// Restrict the instance pool to these suites (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        /// Standardize features over the pool before measuring similarity.
        #[arg(long)]
        scaled: bool,
    },
    /// Train on each suite, test on the others, and join with feature p-values.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        algo: AlgorithmArgs,
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        log: LogArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        band: Option<f64>,
        /// Reuse a p-value matrix written by `compare-features`.
        #[arg(long)]
        pvalues: Option<PathBuf>,
        /// Also write each fitted model as JSON.
        #[arg(long)]
        save_models: bool,
    },
    /// Join feature p-values and evaluation outputs found in `--out`.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        band: Option<f64>,
        #[arg(long)]
        pvalues: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Feature CSV (repeatable; all files must share feature columns).
    #[arg(long = "features")]
    features: Vec<PathBuf>,
    #[arg(long)]
    performance: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `row` fits the scaler on the row suite; `none` compares raw features.
    #[arg(long)]
    scaling: Option<String>,
}

#[derive(Debug, Args)]
struct AlgorithmArgs {
    #[arg(long, conflicts_with = "all_algorithms", required_unless_present = "all_algorithms")]
    algorithm: Option<String>,
    #[arg(long)]
    all_algorithms: bool,
}

#[derive(Debug, Args)]
struct LogArgs {
    #[arg(long)]
    log_base: Option<f64>,
    #[arg(long)]
    log_floor: Option<f64>,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    max_features: Option<f64>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    min_samples_split: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    no_bootstrap: bool,
}

type Settings = BTreeMap<String, String>;

const KNOWN_KEYS: &[&str] = &[
    "features",
    "performance",
    "out",
    "seed",
    "permutations",
    "alpha",
    "scaling",
    "log_base",
    "log_floor",
    "n_trees",
    "max_features",
    "min_samples_leaf",
    "min_samples_split",
    "max_depth",
    "bootstrap",
    "threshold",
    "count",
    "band",
];

fn set<T: ToString>(s: &mut Settings, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        s.insert(key.to_string(), v.to_string());
    }
}

impl CommonArgs {
    fn overrides(&self, s: &mut Settings) {
        if !self.features.is_empty() {
            let joined: Vec<String> = self.features.iter().map(|p| p.display().to_string()).collect();
            s.insert("features".into(), joined.join(","));
        }
        set(s, "performance", &self.performance.as_ref().map(|p| p.display()));
        set(s, "out", &self.out.as_ref().map(|p| p.display()));
        set(s, "seed", &self.seed);
    }
}

impl TestArgs {
    fn overrides(&self, s: &mut Settings) {
        set(s, "permutations", &self.permutations);
        set(s, "alpha", &self.alpha);
        set(s, "scaling", &self.scaling);
    }
}

impl LogArgs {
    fn overrides(&self, s: &mut Settings) {
        set(s, "log_base", &self.log_base);
        set(s, "log_floor", &self.log_floor);
    }
}

impl ForestArgs {
    fn overrides(&self, s: &mut Settings) {
        set(s, "n_trees", &self.n_trees);
        set(s, "max_features", &self.max_features);
        set(s, "min_samples_leaf", &self.min_samples_leaf);
        set(s, "min_samples_split", &self.min_samples_split);
        set(s, "max_depth", &self.max_depth);
        if self.no_bootstrap {
            s.insert("bootstrap".into(), "false".into());
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub features: Vec<PathBuf>,
    pub performance: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub permutations: usize,
    pub alpha: f64,
    pub scaling: ScalingMode,
    pub log: LogTargetConfig,
    pub forest: ForestConfig,
    pub threshold: f64,
    pub count: usize,
    pub band: f64,
}

/// Parses a flat `key = value` config file.
pub fn parse_config_file(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1))
        })?;
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "{}:{}: unknown key `{key}`",
                path.display(),
                i + 1
            )));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn parse_key<T: std::str::FromStr>(s: &Settings, key: &str, default: T) -> Result<T> {
    match s.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`"))),
    }
}

impl RunConfig {
    /// Resolves `cli` over the config file over defaults.
    pub fn resolve(config_file: Option<&Path>, cli: Settings) -> Result<Self> {
        let mut s = match config_file {
            Some(p) => parse_config_file(p)?,
            None => Settings::new(),
        };
        s.extend(cli);
        if !s.contains_key("seed") {
            if let Ok(v) = std::env::var(SEED_ENV) {
                s.insert("seed".into(), v);
            }
        }
        let features: Vec<PathBuf> = s
            .get("features")
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(PathBuf::from)
                    .collect()
            })
            .unwrap_or_default();
        let max_depth = match s.get("max_depth").map(String::as_str) {
            None | Some("none") | Some("") => None,
            Some(v) => Some(
                v.parse()
                    .map_err(|_| Error::Config(format!("invalid value `{v}` for `max_depth`")))?,
            ),
        };
        let seed = parse_key(&s, "seed", DEFAULT_SEED)?;
        let cfg = RunConfig {
            features,
            performance: s.get("performance").map(PathBuf::from),
            out: s.get("out").map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
            seed,
            permutations: parse_key(&s, "permutations", DEFAULT_PERMUTATIONS)?,
            alpha: parse_key(&s, "alpha", DEFAULT_ALPHA)?,
            scaling: match s.get("scaling") {
                Some(v) => v.parse()?,
                None => ScalingMode::RowFitted,
            },
            log: LogTargetConfig {
                base: parse_key(&s, "log_base", LogTargetConfig::default().base)?,
                floor: parse_key(&s, "log_floor", LogTargetConfig::default().floor)?,
            },
            forest: ForestConfig {
                n_trees: parse_key(&s, "n_trees", ForestConfig::default().n_trees)?,
                max_features: parse_key(&s, "max_features", 1.0)?,
                min_samples_leaf: parse_key(&s, "min_samples_leaf", 1)?,
                min_samples_split: parse_key(&s, "min_samples_split", 2)?,
                max_depth,
                bootstrap: parse_key(&s, "bootstrap", true)?,
                seed,
            },
            threshold: parse_key(&s, "threshold", DEFAULT_THRESHOLD)?,
            count: parse_key(&s, "count", 5)?,
            band: parse_key(&s, "band", DEFAULT_BAND)?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.seed == 0 {
            return Err(Error::Config("seed must be positive".into()));
        }
        if self.permutations < 1 {
            return Err(Error::Config("permutations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(-1.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [-1, 1], got {}",
                self.threshold
            )));
        }
        if self.count < 1 {
            return Err(Error::Config("count must be at least 1".into()));
        }
        if !(self.band > 0.0 && self.band.is_finite()) {
            return Err(Error::Config(format!("band must be positive, got {}", self.band)));
        }
        self.log.validate()?;
        self.forest.validate()?;
        for p in self.features.iter().chain(&self.performance) {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }

    /// Flat view echoed into the manifest.
    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::new();
        let paths: Vec<String> = self.features.iter().map(|p| p.display().to_string()).collect();
        s.insert("features".into(), paths.join(","));
        if let Some(p) = &self.performance {
            s.insert("performance".into(), p.display().to_string());
        }
        s.insert("out".into(), self.out.display().to_string());
        s.insert("seed".into(), self.seed.to_string());
        s.insert("permutations".into(), self.permutations.to_string());
        s.insert("alpha".into(), self.alpha.to_string());
        s.insert("scaling".into(), self.scaling.to_string());
        s.insert("log_base".into(), self.log.base.to_string());
        s.insert("log_floor".into(), self.log.floor.to_string());
        s.insert("n_trees".into(), self.forest.n_trees.to_string());
        s.insert("max_features".into(), self.forest.max_features.to_string());
        s.insert("min_samples_leaf".into(), self.forest.min_samples_leaf.to_string());
        s.insert("min_samples_split".into(), self.forest.min_samples_split.to_string());
        s.insert(
            "max_depth".into(),
            self.forest.max_depth.map_or_else(|| "none".to_string(), |d| d.to_string()),
        );
        s.insert("bootstrap".into(), self.forest.bootstrap.to_string());
        s.insert("threshold".into(), self.threshold.to_string());
        s.insert("count".into(), self.count.to_string());
        s.insert("band".into(), self.band.to_string());
        s
    }

    fn compare_config(&self) -> CompareConfig {
        CompareConfig {
            alpha: self.alpha,
            permutations: self.permutations,
            seed: self.seed,
            scaling: self.scaling,
        }
    }

    fn require_features(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("at least one --features file is required".into()));
        }
        Ok(())
    }

    fn require_performance(&self) -> Result<&Path> {
        self.performance
            .as_deref()
            .ok_or_else(|| Error::Config("--performance is required for this command".into()))
    }
}

/// Loads every feature file and the performance file, without validation.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    cfg.require_features()?;
    let ingest = IngestConfig::default();
    let mut ds = Dataset::default();
    for path in &cfg.features {
        ds.merge(data::load_features(path, &ingest)?)?;
    }
    if let Some(p) = &cfg.performance {
        ds.attach_performance(data::load_performance(p)?)?;
    }
    Ok(ds)
}

fn load_validated(cfg: &RunConfig) -> Result<Dataset> {
    let (ds, report) = data::validate_and_drop_incomplete(load_dataset(cfg)?)?;
    if !report.is_empty() {
        eprintln!(
            "note: dropped {} instance(s) with missing feature values (run `validate` for details)",
            report.dropped.len()
        );
    }
    Ok(ds)
}

fn algorithms(ds: &Dataset, algo: &AlgorithmArgs) -> Result<Vec<String>> {
    if algo.all_algorithms {
        if ds.algorithms.is_empty() {
            return Err(Error::InsufficientData("no performance records loaded".into()));
        }
        return Ok(ds.algorithms.iter().cloned().collect());
    }
    let a = algo.algorithm.clone().expect("clap enforces --algorithm");
    if !ds.algorithms.contains(&a) {
        return Err(Error::Coverage {
            algorithm: a,
            suite: "*".into(),
            detail: "algorithm has no performance records".into(),
        });
    }
    Ok(vec![a])
}

struct Run {
    command: &'static str,
    started: Instant,
    inputs: Vec<PathBuf>,
    settings: Settings,
    out: OutputDir,
}

impl Run {
    fn start(command: &'static str, cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            command,
            started: Instant::now(),
            inputs: cfg.features.iter().chain(&cfg.performance).cloned().collect(),
            settings: cfg.to_settings(),
            out: OutputDir::open(&cfg.out)?,
        })
    }

    fn finish(mut self) -> Result<Vec<String>> {
        let inputs = self
            .inputs
            .iter()
            .map(report::digest_file)
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            config: self.settings.clone(),
            inputs,
            elapsed_ms: self.started.elapsed().as_millis(),
            outputs: self.out.written().to_vec(),
        };
        let written = self.out.written().to_vec();
        let path = self.out.file(&format!("manifest_{}.json", self.command.replace('-', "_")));
        report::write_json(&path, &manifest)?;
        let mut all = written;
        all.push(path.file_name().unwrap().to_string_lossy().into_owned());
        Ok(all)
    }
}

#[derive(Serialize)]
struct SuiteSummary {
    suite_id: String,
    instances: usize,
    features: usize,
}

#[derive(Serialize)]
struct DatasetSummary {
    feature_names: Vec<String>,
    suites: Vec<SuiteSummary>,
    algorithms: Vec<String>,
    performance_records: usize,
    dropped_instances: usize,
}

fn cmd_validate(cfg: &RunConfig) -> Result<Vec<String>> {
    let raw = load_dataset(cfg)?;
    let (ds, drops) = data::validate_and_drop_incomplete(raw)?;
    let mut run = Run::start("validate", cfg)?;
    report::write_drop_report(&drops, run.out.file("drop_report.csv"))?;
    let summary = DatasetSummary {
        feature_names: ds.feature_names.clone(),
        suites: ds
            .suites
            .iter()
            .map(|s| SuiteSummary {
                suite_id: s.suite_id.clone(),
                instances: s.k(),
                features: s.n(),
            })
            .collect(),
        algorithms: ds.algorithms.iter().cloned().collect(),
        performance_records: ds.performance.len(),
        dropped_instances: drops.dropped.len(),
    };
    report::write_json(run.out.file("dataset_summary.json"), &summary)?;
    run.finish()
}

fn cmd_compare_features(cfg: &RunConfig) -> Result<Vec<String>> {
    let ds = load_validated(cfg)?;
    let matrix = suite_comparison_matrix(&ds, &cfg.compare_config())?;
    let mut run = Run::start("compare-features", cfg)?;
    report::write_json(run.out.file(PVALUES_FILE), &matrix)?;
    report::write_pvalue_csv(&matrix, run.out.file("feature_pvalues.csv"))?;
    report::emit_heatmap_data(
        &report::pvalue_heatmap(&matrix),
        run.out.file("feature_pvalues_heatmap.csv"),
    )?;
    run.finish()
}

fn cmd_compare_performance(
    cfg: &RunConfig,
    algo: &AlgorithmArgs,
    raw: bool,
) -> Result<Vec<String>> {
    cfg.require_performance()?;
    let ds = load_validated(cfg)?;
    let space = if raw { TargetSpace::Raw } else { TargetSpace::Log };
    let algs = algorithms(&ds, algo)?;
    let matrices = algs
        .iter()
        .map(|a| performance_ks_matrix(&ds, a, cfg.alpha, space, &cfg.log))
        .collect::<Result<Vec<_>>>()?;
    let mut run = Run::start("compare-performance", cfg)?;
    for m in &matrices {
        let tok = file_token(&m.algorithm_id);
        report::write_json(run.out.file(&format!("performance_ks_{tok}.json")), m)?;
        report::write_ks_csv(m, run.out.file(&format!("performance_ks_{tok}.csv")))?;
        report::emit_heatmap_data(
            &report::ks_heatmap(m),
            run.out.file(&format!("performance_ks_{tok}_heatmap.csv")),
        )?;
    }
    run.finish()
}

fn cmd_select(cfg: &RunConfig, suites: &[String], scaled: bool) -> Result<Vec<String>> {
    let ds = load_validated(cfg)?;
    for s in suites {
        if ds.suite(s).is_none() {
            return Err(Error::UnknownSuite(s.clone()));
        }
    }
    let pool: Vec<&InstanceRecord> = ds
        .suites
        .iter()
        .filter(|s| suites.is_empty() || suites.contains(&s.suite_id))
        .flat_map(|s| s.rows.iter())
        .collect();
    let rows: Vec<&[f64]> = pool.iter().map(|r| r.features.as_slice()).collect();
    let mut features = Matrix::from_rows(&rows)?;
    if scaled {
        let (means, scales) = fit_columns(&features)?;
        features = transform_columns(&features, &means, &scales)?;
    }
    let node_ids: Vec<String> = pool.iter().map(|r| selector::instance_key(r)).collect();
    let adjacency = selector::similarity_adjacency(&features, cfg.threshold).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("{msg} (rows are in pool order)")),
        other => other,
    })?;
    let graph = SimilarityGraph {
        node_ids,
        adjacency,
        threshold: cfg.threshold,
    };
    let (results, overlap) = selector::sample_from_graph(&graph, cfg.count, cfg.seed)?;

    let single_source = pool
        .iter()
        .all(|r| r.suite_id == pool.first().map_or("", |p| p.suite_id.as_str()));
    let new_id = |r: &InstanceRecord| {
        if single_source {
            r.instance_id.clone()
        } else {
            selector::instance_key(r)
        }
    };

    let mut run = Run::start("select", cfg)?;
    report::write_selection(&results, run.out.file("selected_instances.csv"))?;
    report::write_overlap(&overlap, run.out.file("selection_overlap.csv"))?;

    let mut header = vec!["instance_id".to_string(), "suite_id".into(), "dimensionality".into()];
    header.extend(ds.feature_names.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut fw = report::CsvOut::create(&run.out.file("selected_features.csv"), &header_refs)?;
    for res in &results {
        for &i in &res.selected_indices {
            let r = pool[i];
            let mut fields = vec![new_id(r), res.suite_label.clone(), r.dimensionality.to_string()];
            fields.extend(r.features.iter().map(|v| report::fmt_f64(*v)));
            fw.row(&fields)?;
        }
    }
    fw.finish()?;

    if cfg.performance.is_some() {
        let mut pw = report::CsvOut::create(
            &run.out.file("selected_performance.csv"),
            &["instance_id", "suite_id", "algorithm_id", "median_target_precision"],
        )?;
        for res in &results {
            for &i in &res.selected_indices {
                let r = pool[i];
                for p in ds
                    .performance
                    .iter()
                    .filter(|p| p.suite_id == r.suite_id && p.instance_id == r.instance_id)
                {
                    pw.row(&[
                        new_id(r),
                        res.suite_label.clone(),
                        p.algorithm_id.clone(),
                        report::fmt_f64(p.median_target_precision),
                    ])?;
                }
            }
        }
        pw.finish()?;
    }
    run.finish()
}

fn cmd_evaluate(
    cfg: &RunConfig,
    algo: &AlgorithmArgs,
    pvalues: Option<&Path>,
    save_models: bool,
) -> Result<Vec<String>> {
    cfg.require_performance()?;
    let ds = load_validated(cfg)?;
    let algs = algorithms(&ds, algo)?;
    let pmatrix: PValueMatrix = match pvalues {
        Some(p) => report::read_json(p)?,
        None => suite_comparison_matrix(&ds, &cfg.compare_config())?,
    };
    let mut evaluations = Vec::new();
    for a in &algs {
        let ev = evaluate::cross_suite_evaluate_with_models(&ds, a, &cfg.forest, &cfg.log)?;
        let align = alignment_report(&pmatrix, &ev.errors, cfg.band)?;
        evaluations.push((ev, align));
    }

    let mut run = Run::start("evaluate", cfg)?;
    if let Some(p) = pvalues {
        run.inputs.push(p.to_path_buf());
    }
    for (ev, align) in &evaluations {
        let tok = file_token(&ev.errors.algorithm_id);
        report::emit_heatmap_data(
            &report::mdae_heatmap(&ev.errors),
            run.out.file(&format!("mdae_{tok}.csv")),
        )?;
        report::write_abs_errors(&ev.errors, run.out.file(&format!("abs_errors_{tok}.csv")))?;
        report::write_json(run.out.file(&format!("error_matrix_{tok}.json")), &ev.errors)?;
        report::write_json(run.out.file(&format!("alignment_{tok}.json")), align)?;
        if save_models {
            for (suite, model) in &ev.models {
                let name = format!("model_{tok}_{}.json", file_token(suite));
                model.save(run.out.file(&name))?;
            }
        }
    }
    let mats: Vec<&ErrorMatrix> = evaluations.iter().map(|(e, _)| &e.errors).collect();
    report::write_training_errors(&mats, run.out.file("training_errors.csv"))?;
    run.finish()
}

#[derive(Serialize)]
struct AlgorithmReport {
    algorithm_id: String,
    mdae: Vec<report::HeatmapRow>,
    training_mdae: BTreeMap<String, f64>,
    alignment: evaluate::AlignmentReport,
}

#[derive(Serialize)]
struct CombinedReport {
    feature_pvalues: Vec<report::HeatmapRow>,
    scaling_mode: ScalingMode,
    alpha: f64,
    band: f64,
    algorithms: Vec<AlgorithmReport>,
    summary: evaluate::AlignmentSummary,
}

fn cmd_report(out: &Path, band: f64, pvalues: Option<&Path>) -> Result<Vec<String>> {
    let pv_path = pvalues.map_or_else(|| out.join(PVALUES_FILE), Path::to_path_buf);
    if !pv_path.is_file() {
        return Err(Error::io(
            &pv_path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "p-value matrix not found (run `compare-features` first)",
            ),
        ));
    }
    let pmatrix: PValueMatrix = report::read_json(&pv_path)?;
    let mut error_files: Vec<PathBuf> = std::fs::read_dir(out)
        .map_err(|e| Error::io(out, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("error_matrix_") && n.ends_with(".json"))
        })
        .collect();
    error_files.sort();
    if error_files.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no error_matrix_*.json in {} (run `evaluate` first)",
            out.display()
        )));
    }
    let mut algorithms = Vec::new();
    let mut summary = evaluate::AlignmentSummary {
        pairs: 0,
        agreeing: 0,
        disagreeing: 0,
    };
    for f in &error_files {
        let em: ErrorMatrix = report::read_json(f)?;
        let alignment = alignment_report(&pmatrix, &em, band)?;
        summary.pairs += alignment.summary.pairs;
        summary.agreeing += alignment.summary.agreeing;
        summary.disagreeing += alignment.summary.disagreeing;
        algorithms.push(AlgorithmReport {
            algorithm_id: em.algorithm_id.clone(),
            mdae: report::mdae_heatmap(&em),
            training_mdae: em.training.iter().map(|t| (t.train.clone(), t.mdae)).collect(),
            alignment,
        });
    }
    let combined = CombinedReport {
        feature_pvalues: report::pvalue_heatmap(&pmatrix),
        scaling_mode: pmatrix.scaling_mode,
        alpha: pmatrix.alpha,
        band,
        algorithms,
        summary,
    };

    let mut settings = Settings::new();
    settings.insert("out".into(), out.display().to_string());
    settings.insert("band".into(), band.to_string());
    let mut run = Run {
        command: "report",
        started: Instant::now(),
        inputs: std::iter::once(pv_path).chain(error_files).collect(),
        settings,
        out: OutputDir::open(out)?,
    };
    report::write_json(run.out.file("report.json"), &combined)?;
    run.finish()
}

fn dispatch(cli: Cli) -> Result<Vec<String>> {
    match cli.command {
        Command::Validate { common } => {
            let mut s = Settings::new();
            common.overrides(&mut s);
            cmd_validate(&RunConfig::resolve(common.config.as_deref(), s)?)
        }
        Command::CompareFeatures { common, test } => {
            let mut s = Settings::new();
            common.overrides(&mut s);
            test.overrides(&mut s);
            cmd_compare_features(&RunConfig::resolve(common.config.as_deref(), s)?)
        }
        Command::ComparePerformance {
            common,
            algo,
            alpha,
            raw,
            log,
        } => {
            let mut s = Settings::new();
            common.overrides(&mut s);
            log.overrides(&mut s);
            set(&mut s, "alpha", &alpha);
            cmd_compare_performance(&RunConfig::resolve(common.config.as_deref(), s)?, &algo, raw)
        }
        Command::Select {
            common,
            suites,
            threshold,
            count,
            scaled,
        } => {
            let mut s = Settings::new();
            common.overrides(&mut s);
            set(&mut s, "threshold", &threshold);
            set(&mut s, "count", &count);
            cmd_select(&RunConfig::resolve(common.config.as_deref(), s)?, &suites, scaled)
        }
        Command::Evaluate {
            common,
            algo,
            test,
            log,
            forest,
            band,
            pvalues,
            save_models,
        } => {
            let mut s = Settings::new();
            common.overrides(&mut s);
            test.overrides(&mut s);
            log.overrides(&mut s);
            forest.overrides(&mut s);
            set(&mut s, "band", &band);
            let cfg = RunConfig::resolve(common.config.as_deref(), s)?;
            cmd_evaluate(&cfg, &algo, pvalues.as_deref(), save_models)
        }
        Command::Report {
            out,
            config,
            band,
            pvalues,
        } => {
            let mut s = Settings::new();
            set(&mut s, "out", &out.as_ref().map(|p| p.display()));
            set(&mut s, "band", &band);
            let cfg = RunConfig::resolve(config.as_deref(), s)?;
            cmd_report(&cfg.out, cfg.band, pvalues.as_deref())
        }
    }
}

/// Runs one invocation and returns the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {f}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}
