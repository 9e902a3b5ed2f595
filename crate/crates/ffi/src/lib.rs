//! C ABI for the slova toolkit.
//!
//! Matrices are passed as row-major `double` buffers of `n_rows * n_cols`
//! entries; labels as `size_t` buffers of `n_rows` entries. Every function
//! returns a [`SlovaStatus`]; on failure [`slova_last_error`] describes the
//! problem. Calibration models live behind the opaque [`SlovaCalibration`]
//! handle, released with [`slova_calibration_free`]. Strings returned by the
//! library are released with [`slova_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use slova::calibrate::{
    self, build_calibration_dataset, fit_exponential, CalibrationModel, FitConfig,
};
use slova::metrics::EvalReport;
use slova::{probs, Error, LabelVector, LogitMatrix, Matrix, ProbKind, ProbMatrix};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlovaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Sizes or enum values out of range.
    InvalidArgument = 2,
    /// Data failed validation (non-finite, out of range, bad labels).
    Validation = 3,
    /// Computation produced non-finite values.
    Numeric = 4,
    /// JSON could not be parsed or has the wrong format version.
    Format = 5,
    /// Input outside a function's mathematical domain.
    Domain = 6,
    /// Internal panic caught at the boundary.
    Panic = 7,
}

/// Probability kinds accepted by [`slova_evaluate`].
pub const SLOVA_KIND_SIGMOID: c_int = 0;
pub const SLOVA_KIND_SLOVA: c_int = 1;
pub const SLOVA_KIND_CALIBRATED: c_int = 2;
pub const SLOVA_KIND_SOFTMAX: c_int = 3;

/// Scalar metrics of one probability matrix.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SlovaMetrics {
    pub accuracy: f64,
    pub ece: f64,
    pub ece_bin_normalized: f64,
    pub nll: f64,
    pub brier: f64,
    pub mmc: f64,
}

/// Opaque fitted calibration map.
pub struct SlovaCalibration {
    model: CalibrationModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(SlovaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Validation(_) | Error::Usage(_) | Error::Io { .. } => SlovaStatus::Validation,
            Error::Numeric(_) | Error::Diverged { .. } => SlovaStatus::Numeric,
            Error::Version { .. } | Error::Json(_) => SlovaStatus::Format,
            Error::Domain(_) => SlovaStatus::Domain,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SlovaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(SlovaStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlovaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SlovaStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            SlovaStatus::Panic
        }
    }
}

unsafe fn matrix(p: *const f64, n: usize, k: usize, what: &str) -> Result<Matrix, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let len = n
        .checked_mul(k)
        .ok_or_else(|| invalid("matrix size overflows"))?;
    Ok(Matrix::from_vec(
        n,
        k,
        std::slice::from_raw_parts(p, len).to_vec(),
    )?)
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn labels(p: *const usize, n: usize, k: usize) -> Result<LabelVector, Fail> {
    if p.is_null() {
        return Err(null("labels"));
    }
    Ok(LabelVector::new(
        std::slice::from_raw_parts(p, n).to_vec(),
        k,
    )?)
}

fn kind_of(kind: c_int) -> Result<ProbKind, Fail> {
    Ok(match kind {
        SLOVA_KIND_SIGMOID => ProbKind::Sigmoid,
        SLOVA_KIND_SLOVA => ProbKind::Slova,
        SLOVA_KIND_CALIBRATED => ProbKind::Calibrated,
        SLOVA_KIND_SOFTMAX => ProbKind::Softmax,
        other => return Err(invalid(format!("unknown probability kind {other}"))),
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn slova_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slova_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn slova_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Element-wise sigmoid of an `n x k` logit matrix into `out` (`n x k`).
///
/// # Safety
/// Buffers must hold `n * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn slova_sigmoid(
    logits: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        let l = LogitMatrix::new(matrix(logits, n, k, "logits")?)?;
        out_slice(out, n * k, "out")?.copy_from_slice(probs::sigmoid_probs(&l).values().as_slice());
        Ok(())
    })
}

/// SLOVA probabilities `p_k * prod_{j != k} (1 - p_j)` of an `n x k` logit
/// matrix into `out` (`n x k`).
///
/// # Safety
/// Buffers must hold `n * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn slova_probs(
    logits: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        let l = LogitMatrix::new(matrix(logits, n, k, "logits")?)?;
        let p = probs::slova_probs(&probs::sigmoid_probs(&l));
        out_slice(out, n * k, "out")?.copy_from_slice(p.values().as_slice());
        Ok(())
    })
}

/// Softmax of `logits / temperature` into `out` (`n x k`).
///
/// # Safety
/// Buffers must hold `n * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn slova_softmax(
    logits: *const f64,
    n: usize,
    k: usize,
    temperature: f64,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let l = LogitMatrix::new(matrix(logits, n, k, "logits")?)?;
        let p = probs::softmax_probs(&l, temperature);
        out_slice(out, n * k, "out")?.copy_from_slice(p.values().as_slice());
        Ok(())
    })
}

/// Per-row OVA confidence, SLOVA confidence and none-probability of an
/// `n x k` logit matrix. Each output holds `n` doubles; any may be null.
///
/// # Safety
/// Non-null outputs must hold `n` doubles; `logits` must hold `n * k`.
#[no_mangle]
pub unsafe extern "C" fn slova_confidences(
    logits: *const f64,
    n: usize,
    k: usize,
    conf_ova: *mut f64,
    conf_slova: *mut f64,
    none_prob: *mut f64,
) -> SlovaStatus {
    guard(|| {
        let l = LogitMatrix::new(matrix(logits, n, k, "logits")?)?;
        let sig = probs::sigmoid_probs(&l);
        if !conf_ova.is_null() {
            out_slice(conf_ova, n, "conf_ova")?.copy_from_slice(&sig.confidences());
        }
        if !conf_slova.is_null() {
            out_slice(conf_slova, n, "conf_slova")?
                .copy_from_slice(&probs::slova_probs(&sig).confidences());
        }
        if !none_prob.is_null() {
            out_slice(none_prob, n, "none_prob")?.copy_from_slice(&probs::none_prob(&sig));
        }
        Ok(())
    })
}

/// Fits an exponential calibration map with `m` terms on `n x k` SLOVA
/// probabilities and their labels. `noise_probs` (`n_noise x k`, may be null
/// when `n_noise` is 0) adds rows labelled "none". The command-line
/// defaults are `m` 20, `epochs` 20 and `n_b` 4000.
///
/// # Safety
/// Buffers must match the given sizes; `out` receives a new handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn slova_calibration_fit(
    probs: *const f64,
    labels_ptr: *const usize,
    n: usize,
    k: usize,
    noise_probs: *const f64,
    n_noise: usize,
    m: usize,
    epochs: usize,
    n_b: usize,
    seed: u64,
    out: *mut *mut SlovaCalibration,
) -> SlovaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ProbMatrix::new(matrix(probs, n, k, "probs")?, ProbKind::Slova)?;
        let y = labels(labels_ptr, n, k)?;
        let noise = if n_noise > 0 {
            Some(ProbMatrix::new(
                matrix(noise_probs, n_noise, k, "noise_probs")?,
                ProbKind::Slova,
            )?)
        } else {
            None
        };
        let ds = build_calibration_dataset(&p, &y, noise.as_ref(), n_b)?;
        let cfg = FitConfig {
            m,
            epochs,
            seed,
            ..FitConfig::default()
        };
        let model = fit_exponential(&ds, &cfg)?;
        *out = Box::into_raw(Box::new(SlovaCalibration { model }));
        Ok(())
    })
}

/// Builds a calibration map from explicit exponents and weights (`m` each).
///
/// # Safety
/// `alphas` and `betas` must hold `m` doubles; `out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_new(
    alphas: *const f64,
    betas: *const f64,
    m: usize,
    out: *mut *mut SlovaCalibration,
) -> SlovaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if alphas.is_null() || betas.is_null() {
            return Err(null("alphas/betas"));
        }
        let a = std::slice::from_raw_parts(alphas, m).to_vec();
        let b = std::slice::from_raw_parts(betas, m).to_vec();
        let model = CalibrationModel::new(a, b)?;
        *out = Box::into_raw(Box::new(SlovaCalibration { model }));
        Ok(())
    })
}

/// Parses a calibration model JSON document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_from_json(
    json: *const c_char,
    out: *mut *mut SlovaCalibration,
) -> SlovaStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Fail(SlovaStatus::Format, "json is not UTF-8".into()))?;
        let model = CalibrationModel::from_json(text)?;
        *out = Box::into_raw(Box::new(SlovaCalibration { model }));
        Ok(())
    })
}

/// Serialises a model to JSON; free the string with [`slova_string_free`].
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_to_json(
    model: *const SlovaCalibration,
    out: *mut *mut c_char,
) -> SlovaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = m.model.to_json()?;
        *out = CString::new(s)
            .map_err(|_| Fail(SlovaStatus::Format, "JSON contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// Number of terms `M` of a model, or 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_terms(model: *const SlovaCalibration) -> usize {
    model.as_ref().map_or(0, |m| m.model.m)
}

/// Evaluates the calibration map at one probability.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_eval(
    model: *const SlovaCalibration,
    p: f64,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("probability {p} outside [0, 1]")));
        }
        *out = m.model.eval(p);
        Ok(())
    })
}

/// Applies the map to every entry of an `n x k` SLOVA probability matrix.
///
/// # Safety
/// `model` must be a live handle; buffers must hold `n * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_apply(
    model: *const SlovaCalibration,
    probs: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let p = ProbMatrix::new(matrix(probs, n, k, "probs")?, ProbKind::Slova)?;
        out_slice(out, n * k, "out")?.copy_from_slice(m.model.apply(&p).values().as_slice());
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn slova_calibration_free(model: *mut SlovaCalibration) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Accuracy, ECE (`bins` equal-width bins), NLL, Brier and mean maximum
/// confidence of an `n x k` probability matrix of the given `SLOVA_KIND_*`.
///
/// # Safety
/// Buffers must match the given sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slova_evaluate(
    probs: *const f64,
    labels_ptr: *const usize,
    n: usize,
    k: usize,
    kind: c_int,
    bins: usize,
    out: *mut SlovaMetrics,
) -> SlovaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ProbMatrix::new(matrix(probs, n, k, "probs")?, kind_of(kind)?)?;
        let y = labels(labels_ptr, n, k)?;
        let r = EvalReport::evaluate(&p, &y, bins)?;
        *out = SlovaMetrics {
            accuracy: r.accuracy,
            ece: r.ece,
            ece_bin_normalized: r.ece_bin_normalized,
            nll: r.nll,
            brier: r.brier,
            mmc: r.mmc,
        };
        Ok(())
    })
}

/// Calibration curve of SLOVA scores when all `k` sigmoids are i.i.d.
/// uniform (CDF of a product of `k` uniforms).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slova_exact_random_calibration(
    p: f64,
    k: usize,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        check_scalar(p, k, out)?;
        *out = calibrate::exact_random_calibration(p, k);
        Ok(())
    })
}

/// Approximate curve `1 - (1 - p)^k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slova_approx_random_calibration(
    p: f64,
    k: usize,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        check_scalar(p, k, out)?;
        *out = calibrate::approx_random_calibration(p, k);
        Ok(())
    })
}

/// Density of the SLOVA score of `k` i.i.d. uniform sigmoids.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slova_random_slova_density(
    p: f64,
    k: usize,
    out: *mut f64,
) -> SlovaStatus {
    guard(|| {
        check_scalar(p, k, out)?;
        *out = calibrate::random_slova_density(p, k)?;
        Ok(())
    })
}

fn check_scalar(p: f64, k: usize, out: *mut f64) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Fail(
            SlovaStatus::Domain,
            format!("probability {p} outside [0, 1]"),
        ));
    }
    Ok(())
}
