//! C ABI over the `suitegauge` library.
//!
//! Every fallible function returns an [`SgStatus`]. On failure the message is
//! kept per thread and can be read with [`sg_last_error_message`]. Handles are
//! opaque and must be released with the matching `*_free` function. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with [`sg_string_free`]. Matrices are passed row-major as
//! `rows * cols` contiguous doubles.
//!
//! Panics never cross the boundary; they are reported as `SG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use suitegauge::data::{self, Dataset, IngestConfig};
use suitegauge::forest::{fit_forest, ForestConfig, ForestModel};
use suitegauge::similarity::{
    energy_statistic, permutation_pvalue, suite_comparison_matrix, CompareConfig,
    EnergyTestResult, PValueMatrix, ScalingMode,
};
use suitegauge::{ks, selector, Error, Matrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Schema = 4,
    Integrity = 5,
    Domain = 6,
    Shape = 7,
    InsufficientData = 8,
    Io = 9,
    Config = 10,
    Panic = 11,
}

/// Outcome of a two-sample energy test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgEnergyResult {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
    pub significant: bool,
}

/// Outcome of a two-sample Kolmogorov-Smirnov test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgKsResult {
    pub statistic_d: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    pub significant: bool,
}

/// Forest hyperparameters. `max_depth == 0` means unlimited.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SgForestConfig {
    pub n_trees: usize,
    pub max_features: f64,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

pub struct SgDataset {
    inner: Dataset,
}

pub struct SgPValueMatrix {
    inner: PValueMatrix,
}

pub struct SgForest {
    inner: ForestModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } | Error::Json { .. } => SgStatus::Parse,
            Error::Schema(_) => SgStatus::Schema,
            Error::Integrity(_) | Error::Coverage { .. } => SgStatus::Integrity,
            Error::Domain(_) => SgStatus::Domain,
            Error::Shape(_) => SgStatus::Shape,
            Error::InsufficientData(_) | Error::SuiteTooSmall { .. } => SgStatus::InsufficientData,
            Error::UnknownSuite(_) => SgStatus::InvalidArgument,
            Error::Config(_) => SgStatus::Config,
            Error::Io { .. } => SgStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SgStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SgStatus::InvalidArgument, msg.into())
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn matrix_arg(p: *const f64, rows: usize, cols: usize, what: &str) -> Result<Matrix, Failure> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| invalid(format!("`{what}` dimensions overflow")))?;
    if len == 0 {
        return Ok(Matrix::new(rows, cols, Vec::new())?);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(Matrix::new(rows, cols, std::slice::from_raw_parts(p, len).to_vec())?)
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn owned_string(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

impl From<EnergyTestResult> for SgEnergyResult {
    fn from(r: EnergyTestResult) -> Self {
        SgEnergyResult {
            statistic: r.statistic,
            p_value: r.p_value,
            permutations: r.permutations,
            seed: r.seed,
            significant: r.significant,
        }
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn sg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a feature CSV and, if `performance_path` is non-null, a
/// performance CSV.
///
/// # Safety
/// Paths must be null-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_load(
    features_path: *const c_char,
    performance_path: *const c_char,
    out: *mut *mut SgDataset,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let fpath = str_arg(features_path, "features_path")?;
        let mut ds = data::load_features(fpath, &IngestConfig::default())?;
        if !performance_path.is_null() {
            let ppath = str_arg(performance_path, "performance_path")?;
            ds.attach_performance(data::load_performance(ppath)?)?;
        }
        *out = Box::into_raw(Box::new(SgDataset { inner: ds }));
        Ok(())
    })
}

/// Drops instances with missing features in place. `dropped` (nullable)
/// receives the number removed.
///
/// # Safety
/// `ds` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_validate(ds: *mut SgDataset, dropped: *mut usize) -> SgStatus {
    guard(|| {
        let ds = ds.as_mut().ok_or_else(|| null("ds"))?;
        let (clean, report) = data::validate_and_drop_incomplete(ds.inner.clone())?;
        ds.inner = clean;
        if let Some(d) = dropped.as_mut() {
            *d = report.dropped.len();
        }
        Ok(())
    })
}

/// Number of suites, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_suite_count(ds: *const SgDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.suites.len())
}

/// Suite id at `index` (in order of first appearance) and its instance count.
///
/// # Safety
/// `ds` must be a live handle; `id_out` must be writable; `k_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_suite(
    ds: *const SgDataset,
    index: usize,
    id_out: *mut *mut c_char,
    k_out: *mut usize,
) -> SgStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let id_out = out_arg(id_out, "id_out")?;
        let suite = ds
            .inner
            .suites
            .get(index)
            .ok_or_else(|| invalid(format!("suite index {index} out of range")))?;
        if let Some(k) = k_out.as_mut() {
            *k = suite.k();
        }
        *id_out = owned_string(&suite.suite_id);
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_free(ds: *mut SgDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Energy-test p-values for every ordered pair of suites. `row_fitted_scaling`
/// selects per-row standardization; otherwise raw features are compared.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_compare_features(
    ds: *const SgDataset,
    permutations: usize,
    seed: u64,
    alpha: f64,
    row_fitted_scaling: bool,
    out: *mut *mut SgPValueMatrix,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = handle(ds, "ds")?;
        let cfg = CompareConfig {
            alpha,
            permutations,
            seed,
            scaling: if row_fitted_scaling {
                ScalingMode::RowFitted
            } else {
                ScalingMode::None
            },
        };
        let m = suite_comparison_matrix(&ds.inner, &cfg)?;
        *out = Box::into_raw(Box::new(SgPValueMatrix { inner: m }));
        Ok(())
    })
}

/// Number of suites on each side of the matrix, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_pvalue_matrix_size(m: *const SgPValueMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.suite_ids.len())
}

/// # Safety
/// `m` must be a live handle; `id_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_pvalue_matrix_suite_id(
    m: *const SgPValueMatrix,
    index: usize,
    id_out: *mut *mut c_char,
) -> SgStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let id_out = out_arg(id_out, "id_out")?;
        let id = m
            .inner
            .suite_ids
            .get(index)
            .ok_or_else(|| invalid(format!("suite index {index} out of range")))?;
        *id_out = owned_string(id);
        Ok(())
    })
}

/// Result for the cell at (`row`, `col`); rows carry the fitted scaler.
/// Diagonal cells are not computed and report `SG_STATUS_INVALID_ARGUMENT`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_pvalue_matrix_cell(
    m: *const SgPValueMatrix,
    row: usize,
    col: usize,
    out: *mut SgEnergyResult,
) -> SgStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let out = out_arg(out, "out")?;
        let ids = &m.inner.suite_ids;
        let (r, c) = match (ids.get(row), ids.get(col)) {
            (Some(r), Some(c)) => (r, c),
            _ => return Err(invalid(format!("cell ({row}, {col}) out of range"))),
        };
        let res = m
            .inner
            .get(r, c)
            .ok_or_else(|| invalid(format!("no cell for ({r}, {c})")))?;
        *out = (*res).into();
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_pvalue_matrix_free(m: *mut SgPValueMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Energy statistic between a `k1 x n` and a `k2 x n` sample.
///
/// # Safety
/// `p` and `q` must point to `k1 * n` and `k2 * n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_energy_statistic(
    p: *const f64,
    k1: usize,
    q: *const f64,
    k2: usize,
    n: usize,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let pm = matrix_arg(p, k1, n, "p")?;
        let qm = matrix_arg(q, k2, n, "q")?;
        *out = energy_statistic(&pm, &qm)?;
        Ok(())
    })
}

/// Energy statistic with a seeded permutation p-value.
///
/// # Safety
/// As for [`sg_energy_statistic`].
#[no_mangle]
pub unsafe extern "C" fn sg_energy_test(
    p: *const f64,
    k1: usize,
    q: *const f64,
    k2: usize,
    n: usize,
    permutations: usize,
    seed: u64,
    alpha: f64,
    out: *mut SgEnergyResult,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let pm = matrix_arg(p, k1, n, "p")?;
        let qm = matrix_arg(q, k2, n, "q")?;
        *out = permutation_pvalue(&pm, &qm, permutations, seed, alpha)?.into();
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// # Safety
/// `x` and `y` must point to `n` and `m` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_ks_test(
    x: *const f64,
    n: usize,
    y: *const f64,
    m: usize,
    alpha: f64,
    out: *mut SgKsResult,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let xs = slice_arg(x, n, "x")?;
        let ys = slice_arg(y, m, "y")?;
        let r = ks::ks_test(xs, ys, "", alpha)?;
        *out = SgKsResult {
            statistic_d: r.statistic_d,
            p_value: r.p_value,
            n: r.n,
            m: r.m,
            significant: r.significant,
        };
        Ok(())
    })
}

/// One seeded maximal independent set of the cosine-similarity graph over
/// the `k` rows of `features`. `mask_out[i]` is set to 1 for selected rows
/// and 0 otherwise; `count_out` (nullable) receives the set size.
///
/// # Safety
/// `features` must point to `k * n` doubles and `mask_out` to `k` bytes.
#[no_mangle]
pub unsafe extern "C" fn sg_select_instances(
    features: *const f64,
    k: usize,
    n: usize,
    threshold: f64,
    seed: u64,
    mask_out: *mut u8,
    count_out: *mut usize,
) -> SgStatus {
    guard(|| {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(invalid(format!("threshold must lie in [-1, 1], got {threshold}")));
        }
        let x = matrix_arg(features, k, n, "features")?;
        if k > 0 && mask_out.is_null() {
            return Err(null("mask_out"));
        }
        let adjacency = selector::similarity_adjacency(&x, threshold)?;
        let chosen = selector::mis_indices(&adjacency, seed);
        if k > 0 {
            let mask = std::slice::from_raw_parts_mut(mask_out, k);
            mask.fill(0);
            for &i in &chosen {
                mask[i] = 1;
            }
        }
        if let Some(c) = count_out.as_mut() {
            *c = chosen.len();
        }
        Ok(())
    })
}

/// Library defaults for forest hyperparameters.
#[no_mangle]
pub extern "C" fn sg_forest_config_default() -> SgForestConfig {
    let d = ForestConfig::default();
    SgForestConfig {
        n_trees: d.n_trees,
        max_features: d.max_features,
        min_samples_leaf: d.min_samples_leaf,
        min_samples_split: d.min_samples_split,
        max_depth: d.max_depth.unwrap_or(0),
        bootstrap: d.bootstrap,
        seed: d.seed,
    }
}

/// Fits a regression forest on a `k x n` design matrix. A null `config`
/// uses the defaults.
///
/// # Safety
/// `x` must point to `k * n` doubles, `y` to `k`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_forest_fit(
    x: *const f64,
    k: usize,
    n: usize,
    y: *const f64,
    config: *const SgForestConfig,
    out: *mut *mut SgForest,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let xm = matrix_arg(x, k, n, "x")?;
        let ys = slice_arg(y, k, "y")?;
        let c = config.as_ref().copied().unwrap_or_else(|| sg_forest_config_default());
        let cfg = ForestConfig {
            n_trees: c.n_trees,
            max_features: c.max_features,
            min_samples_leaf: c.min_samples_leaf,
            min_samples_split: c.min_samples_split,
            max_depth: (c.max_depth > 0).then_some(c.max_depth),
            bootstrap: c.bootstrap,
            seed: c.seed,
        };
        let model = fit_forest(&xm, ys, &cfg)?;
        *out = Box::into_raw(Box::new(SgForest { inner: model }));
        Ok(())
    })
}

/// Predicts `k` rows of an `k x n` matrix into `out`.
///
/// # Safety
/// `forest` must be a live handle; `x` must point to `k * n` doubles and
/// `out` to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sg_forest_predict(
    forest: *const SgForest,
    x: *const f64,
    k: usize,
    n: usize,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        let f = handle(forest, "forest")?;
        let xm = matrix_arg(x, k, n, "x")?;
        let pred = f.inner.predict(&xm)?;
        if k > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            std::slice::from_raw_parts_mut(out, k).copy_from_slice(&pred);
        }
        Ok(())
    })
}

/// Serializes a model as versioned JSON.
///
/// # Safety
/// `forest` must be a live handle; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_forest_to_json(
    forest: *const SgForest,
    json_out: *mut *mut c_char,
) -> SgStatus {
    guard(|| {
        let f = handle(forest, "forest")?;
        let json_out = out_arg(json_out, "json_out")?;
        *json_out = owned_string(&f.inner.to_json());
        Ok(())
    })
}

/// # Safety
/// `json` must be a null-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_forest_from_json(
    json: *const c_char,
    out: *mut *mut SgForest,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let model = ForestModel::from_json(text)?;
        *out = Box::into_raw(Box::new(SgForest { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `forest` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_forest_free(forest: *mut SgForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}
