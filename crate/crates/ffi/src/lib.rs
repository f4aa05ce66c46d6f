//! C ABI over the `bayeslogit` classifiers.
//!
//! Models and datasets are opaque heap handles created by `*_new`, `*_fit`,
//! `*_train` or `*_from_text` and released with the matching `*_free`. Every
//! fallible call returns a [`BlStatus`]; on failure a description is available
//! from [`bl_last_error_message`] on the same thread. Strings returned by the
//! library are released with [`bl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bayeslogit::format::{self, FormatError, SavedModel};
use bayeslogit::harness::{self, CompareMode, CompareOptions, ScenarioSpec};
use bayeslogit::{
    bayes, logit, Error, FeatureKind, FeatureMap, GenerativeModel, LabeledDataset, LogitModel, TrainConfig,
    VarianceEstimator,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    SingularCovariance = 4,
    EmptyClass = 5,
    InsufficientData = 6,
    Degenerate = 7,
    UndefinedPosterior = 8,
    InvalidOverlap = 9,
    NonFinite = 10,
    Parse = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for BlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => BlStatus::DimensionMismatch,
            Error::SingularCovariance => BlStatus::SingularCovariance,
            Error::EmptyClass(_) => BlStatus::EmptyClass,
            Error::InsufficientData { .. } => BlStatus::InsufficientData,
            Error::ZeroVariance(_) | Error::ZeroWidth(_) => BlStatus::Degenerate,
            Error::UndefinedPosterior => BlStatus::UndefinedPosterior,
            Error::InvalidOverlap { .. } => BlStatus::InvalidOverlap,
            Error::NonFiniteLikelihood(_) => BlStatus::NonFinite,
            Error::InvalidParameter(_) | Error::InvalidSpec(_) | Error::InvalidDataset(_) => {
                BlStatus::InvalidArgument
            }
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlVarianceEstimator {
    Population = 0,
    Sample = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlFeatureKind {
    Linear = 0,
    Quadratic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlCompareMode {
    Estimated = 0,
    Exact = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlTrainConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub backtracking: bool,
    pub step_growth: f64,
    pub l2: f64,
}

impl From<TrainConfig> for BlTrainConfig {
    fn from(c: TrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            max_iters: c.max_iters,
            grad_tol: c.grad_tol,
            seed: c.seed,
            backtracking: c.backtracking,
            step_growth: c.step_growth,
            l2: c.l2,
        }
    }
}

impl From<BlTrainConfig> for TrainConfig {
    fn from(c: BlTrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            max_iters: c.max_iters,
            grad_tol: c.grad_tol,
            seed: c.seed,
            backtracking: c.backtracking,
            step_growth: c.step_growth,
            l2: c.l2,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlTrainReport {
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_ll: f64,
    pub converged: bool,
    pub max_abs_weight: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlCompareSummary {
    pub max_abs_prob_diff: f64,
    pub max_coefficient_error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Uniform scenarios only: every piecewise branch matched.
    pub branches_pass: bool,
}

/// Opaque labelled dataset.
pub struct BlDataset(LabeledDataset);

/// Opaque generative (Bayes) model.
pub struct BlGenerativeModel(GenerativeModel);

/// Opaque logistic regression model.
pub struct BlLogitModel(LogitModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: BlStatus, msg: &str) -> BlStatus {
    set_error(msg);
    status
}

fn fail_err(e: &Error) -> BlStatus {
    fail(BlStatus::from(e), &e.to_string())
}

fn fail_format(e: &FormatError) -> BlStatus {
    match e {
        FormatError::Io(_) => fail(BlStatus::Io, &e.to_string()),
        FormatError::Parse { .. } => fail(BlStatus::Parse, &e.to_string()),
        FormatError::Model(inner) => fail_err(inner),
    }
}

/// Runs `f`, turning panics into `BlStatus::Panic`.
fn guard(f: impl FnOnce() -> BlStatus) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == BlStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(BlStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(BlStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, BlStatus> {
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BlStatus::InvalidArgument, "string is not valid UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the most recent failure on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a dataset from `n * dim` row-major features and `n` labels in `1..=num_classes`.
///
/// # Safety
/// `features` must point to `n * dim` doubles, `labels` to `n` values and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bl_dataset_new(
    features: *const f64,
    labels: *const u32,
    n: usize,
    dim: usize,
    num_classes: usize,
    out: *mut *mut BlDataset,
) -> BlStatus {
    non_null!(features, labels, out);
    guard(|| {
        let Some(len) = n.checked_mul(dim) else {
            return fail(BlStatus::InvalidArgument, "n * dim overflows");
        };
        let feats = std::slice::from_raw_parts(features, len).to_vec();
        let labs: Vec<usize> = std::slice::from_raw_parts(labels, n).iter().map(|&y| y as usize).collect();
        match LabeledDataset::new(feats, dim, &labs, num_classes) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(BlDataset(ds)));
                BlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Reads a `y,x1,...,xd` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_dataset_read_csv(path: *const c_char, out: *mut *mut BlDataset) -> BlStatus {
    non_null!(path, out);
    guard(|| {
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) => return fail(BlStatus::Io, &format!("{path}: {e}")),
        };
        match format::read_dataset(std::io::BufReader::new(file)) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(BlDataset(ds)));
                BlStatus::Ok
            }
            Err(e) => fail_format(&e),
        }
    })
}

/// # Safety
/// `ds` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_dataset_len(ds: *const BlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `ds` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_dataset_dim(ds: *const BlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `ds` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_dataset_num_classes(ds: *const BlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_classes())
}

/// # Safety
/// `ds` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bl_dataset_free(ds: *mut BlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Method-of-moments Gaussian fit (univariate when `dim == 1`).
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_fit_gaussian(
    ds: *const BlDataset,
    estimator: BlVarianceEstimator,
    out: *mut *mut BlGenerativeModel,
) -> BlStatus {
    non_null!(ds, out);
    guard(|| {
        let est = match estimator {
            BlVarianceEstimator::Population => VarianceEstimator::Population,
            BlVarianceEstimator::Sample => VarianceEstimator::Sample,
        };
        match GenerativeModel::fit_gaussian(&(*ds).0, est) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(BlGenerativeModel(m)));
                BlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Min/max uniform-support fit of a 1-d dataset.
///
/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_fit_uniform(ds: *const BlDataset, out: *mut *mut BlGenerativeModel) -> BlStatus {
    non_null!(ds, out);
    guard(|| match GenerativeModel::fit_uniform(&(*ds).0) {
        Ok(m) => {
            *out = Box::into_raw(Box::new(BlGenerativeModel(m)));
            BlStatus::Ok
        }
        Err(e) => fail_err(&e),
    })
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_num_classes(model: *const BlGenerativeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_classes())
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_dim(model: *const BlGenerativeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// Writes `P(y = s | x)` for every class into `probs` (length `num_classes`).
/// Returns `BL_STATUS_UNDEFINED_POSTERIOR` where every class density vanishes.
///
/// # Safety
/// `x` must hold `dim` doubles and `probs` room for `num_classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_posterior(
    model: *const BlGenerativeModel,
    x: *const f64,
    dim: usize,
    probs: *mut f64,
    num_classes: usize,
) -> BlStatus {
    non_null!(model, x, probs);
    guard(|| {
        let m = &(*model).0;
        if num_classes != m.num_classes() {
            return fail(BlStatus::DimensionMismatch, "probs length differs from class count");
        }
        match bayes::posterior_direct(m, std::slice::from_raw_parts(x, dim)) {
            Ok(p) => {
                std::slice::from_raw_parts_mut(probs, num_classes).copy_from_slice(&p);
                BlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Posterior of 0-based class `class` through the log-odds form. Gaussian models only.
///
/// # Safety
/// `x` must hold `dim` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_posterior_logistic_form(
    model: *const BlGenerativeModel,
    class: usize,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> BlStatus {
    non_null!(model, x, out);
    guard(|| match bayes::posterior_logistic_form(&(*model).0, class, std::slice::from_raw_parts(x, dim)) {
        Ok(p) => {
            *out = p;
            BlStatus::Ok
        }
        Err(e) => fail_err(&e),
    })
}

/// Closed-form discriminant `z_{m,s}` (0-based classes) of a Gaussian model.
/// `beta` receives `dim` values and `gamma` `dim * dim` values, row-major.
///
/// # Safety
/// Output pointers must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_discriminant(
    model: *const BlGenerativeModel,
    m: usize,
    s: usize,
    alpha: *mut f64,
    beta: *mut f64,
    beta_len: usize,
    gamma: *mut f64,
    gamma_len: usize,
) -> BlStatus {
    non_null!(model, alpha, beta, gamma);
    guard(|| {
        let c = match bayes::discriminant(&(*model).0, m, s) {
            Ok(c) => c,
            Err(e) => return fail_err(&e),
        };
        let d = c.dim();
        if beta_len != d || gamma_len != d * d {
            return fail(BlStatus::DimensionMismatch, "output buffers do not match model dimension");
        }
        *alpha = c.alpha;
        std::slice::from_raw_parts_mut(beta, d).copy_from_slice(&c.beta);
        let g = std::slice::from_raw_parts_mut(gamma, d * d);
        for j in 0..d {
            for h in 0..d {
                g[j * d + h] = c.gamma[(j, h)];
            }
        }
        BlStatus::Ok
    })
}

/// Model-file text for a generative model; free with `bl_string_free`.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_to_text(model: *const BlGenerativeModel) -> *mut c_char {
    match model.as_ref() {
        Some(m) => into_c_string(SavedModel::Generative(m.0.clone()).to_text()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_from_text(text: *const c_char, out: *mut *mut BlGenerativeModel) -> BlStatus {
    non_null!(text, out);
    guard(|| {
        let text = match c_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match SavedModel::from_text(text) {
            Ok(SavedModel::Generative(m)) => {
                *out = Box::into_raw(Box::new(BlGenerativeModel(m)));
                BlStatus::Ok
            }
            Ok(SavedModel::Logit(_)) => fail(BlStatus::InvalidArgument, "model file holds a logit model"),
            Err(e) => fail_format(&e),
        }
    })
}

/// # Safety
/// `model` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bl_generative_free(model: *mut BlGenerativeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub extern "C" fn bl_train_config_default() -> BlTrainConfig {
    TrainConfig::default().into()
}

/// Gradient-ascent fit. `config` may be null for defaults; `report` may be null.
///
/// # Safety
/// `ds` must be a live handle, `out` writable, `config`/`report` valid or null.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_train(
    ds: *const BlDataset,
    features: BlFeatureKind,
    config: *const BlTrainConfig,
    out: *mut *mut BlLogitModel,
    report: *mut BlTrainReport,
) -> BlStatus {
    non_null!(ds, out);
    guard(|| {
        let data = &(*ds).0;
        let cfg: TrainConfig = config.as_ref().map_or_else(TrainConfig::default, |c| (*c).into());
        let kind = match features {
            BlFeatureKind::Linear => FeatureKind::Linear,
            BlFeatureKind::Quadratic => FeatureKind::Quadratic,
        };
        match logit::train(data, FeatureMap::new(kind, data.dim()), &cfg) {
            Ok((m, r)) => {
                if let Some(rep) = report.as_mut() {
                    *rep = BlTrainReport {
                        iterations: r.iterations,
                        final_grad_norm: r.final_grad_norm,
                        final_ll: r.final_ll,
                        converged: r.converged,
                        max_abs_weight: r.max_abs_weight,
                    };
                }
                *out = Box::into_raw(Box::new(BlLogitModel(m)));
                BlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_num_classes(model: *const BlLogitModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_classes())
}

/// Number of weights per non-reference class (intercept included).
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_weight_len(model: *const BlLogitModel) -> usize {
    model.as_ref().map_or(0, |m| 1 + m.0.feature_map().output_dim())
}

/// Copies the weights of 0-based non-reference class `class`.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_weights(model: *const BlLogitModel, class: usize, out: *mut f64, len: usize) -> BlStatus {
    non_null!(model, out);
    guard(|| {
        let m = &(*model).0;
        if class + 1 >= m.num_classes() {
            return fail(BlStatus::InvalidArgument, "class index is the reference class or out of range");
        }
        let w = m.weights(class);
        if len != w.len() {
            return fail(BlStatus::DimensionMismatch, "weight buffer has the wrong length");
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(w);
        BlStatus::Ok
    })
}

/// # Safety
/// `x` must hold `dim` doubles and `probs` room for `num_classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_predict_proba(
    model: *const BlLogitModel,
    x: *const f64,
    dim: usize,
    probs: *mut f64,
    num_classes: usize,
) -> BlStatus {
    non_null!(model, x, probs);
    guard(|| {
        let m = &(*model).0;
        if num_classes != m.num_classes() {
            return fail(BlStatus::DimensionMismatch, "probs length differs from class count");
        }
        match logit::predict_proba(m, std::slice::from_raw_parts(x, dim)) {
            Ok(p) => {
                std::slice::from_raw_parts_mut(probs, num_classes).copy_from_slice(&p);
                BlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_to_text(model: *const BlLogitModel) -> *mut c_char {
    match model.as_ref() {
        Some(m) => into_c_string(SavedModel::Logit(m.0.clone()).to_text()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_from_text(text: *const c_char, out: *mut *mut BlLogitModel) -> BlStatus {
    non_null!(text, out);
    guard(|| {
        let text = match c_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match SavedModel::from_text(text) {
            Ok(SavedModel::Logit(m)) => {
                *out = Box::into_raw(Box::new(BlLogitModel(m)));
                BlStatus::Ok
            }
            Ok(SavedModel::Generative(_)) => fail(BlStatus::InvalidArgument, "model file holds a generative model"),
            Err(e) => fail_format(&e),
        }
    })
}

/// # Safety
/// `model` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bl_logit_free(model: *mut BlLogitModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the comparison experiment on a TOML scenario with default training
/// settings. `report_text` may be null; otherwise it receives the full text
/// report, to be released with `bl_string_free`.
///
/// # Safety
/// `spec_toml` must be NUL-terminated; `summary` writable; `report_text` writable or null.
#[no_mangle]
pub unsafe extern "C" fn bl_compare(
    spec_toml: *const c_char,
    mode: BlCompareMode,
    eval_points: usize,
    summary: *mut BlCompareSummary,
    report_text: *mut *mut c_char,
) -> BlStatus {
    non_null!(spec_toml, summary);
    guard(|| {
        let text = match c_str(spec_toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec = match ScenarioSpec::from_toml(text) {
            Ok(s) => s,
            Err(e) => return fail_err(&e),
        };
        let opts = CompareOptions {
            eval_points,
            mode: match mode {
                BlCompareMode::Estimated => CompareMode::Estimated,
                BlCompareMode::Exact => CompareMode::Exact,
            },
            ..CompareOptions::default()
        };
        match harness::run_comparison(&spec, &opts) {
            Ok(r) => {
                *summary = BlCompareSummary {
                    max_abs_prob_diff: r.max_abs_prob_diff,
                    max_coefficient_error: r.max_coefficient_error(),
                    iterations: r.train_report.as_ref().map_or(0, |t| t.iterations),
                    converged: r.train_report.as_ref().is_some_and(|t| t.converged),
                    branches_pass: r.all_branches_pass(),
                };
                if let Some(slot) = report_text.as_mut() {
                    *slot = into_c_string(r.to_text());
                }
                BlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}
