//! C interface to `ruelle_ctmc`.
//!
//! Models are opaque handles created from JSON text or from a row-major
//! generator and freed with [`ruelle_model_free`]. Every fallible call
//! returns a [`RuelleStatus`]; on failure the message is available from
//! [`ruelle_last_error`] on the same thread. States are 1-based and times
//! on cylinders are integer ticks of 1e-6 time units.
//!
//! Output buffers are caller-allocated with the documented lengths, except
//! strings from [`ruelle_verify_json`], which must be released with
//! [`ruelle_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;
use std::sync::OnceLock;

use ruelle_ctmc::model::{Model, ModelFile, COLUMN_CONVENTION};
use ruelle_ctmc::verify::{run_verification, VerifyConfig};
use ruelle_ctmc::{fk_estimate, semigroup, CylinderSpec, Error, GibbsModel, NuMode, TimePoint};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuelleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    DegenerateSpectrum = 4,
    Numerical = 5,
    InvalidCylinder = 6,
    Panic = 7,
}

/// Which functional plays the role of the Gibbs state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuelleNuMode {
    Literal = 0,
    HTransform = 1,
}

impl From<RuelleNuMode> for NuMode {
    fn from(m: RuelleNuMode) -> Self {
        match m {
            RuelleNuMode::Literal => NuMode::Literal,
            RuelleNuMode::HTransform => NuMode::HTransform,
        }
    }
}

/// Opaque model handle.
pub struct RuelleModel {
    model: Model,
    gibbs: OnceLock<Result<GibbsModel, Error>>,
}

impl RuelleModel {
    fn gibbs(&self) -> Result<&GibbsModel, Error> {
        self.gibbs.get_or_init(|| self.model.gibbs()).as_ref().map_err(Clone::clone)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> RuelleStatus {
    match e {
        Error::NonSquare { .. }
        | Error::TooFewStates(_)
        | Error::NonFinite { .. }
        | Error::ZeroDiagonal { .. }
        | Error::NegativeOffDiagonal { .. }
        | Error::ColumnSumDefect { .. }
        | Error::Reducible { .. }
        | Error::NonFinitePotential(_)
        | Error::Model(_) => RuelleStatus::InvalidModel,
        Error::DegenerateSpectrum(_) => RuelleStatus::DegenerateSpectrum,
        Error::SolveFailure(_) | Error::Overflow => RuelleStatus::Numerical,
        Error::InvalidCylinder(_)
        | Error::UndecidableFuture { .. }
        | Error::AnchorRequired
        | Error::AnchorMismatch { .. } => RuelleStatus::InvalidCylinder,
        _ => RuelleStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RuelleStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RuelleStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("{what} is null"));
            RuelleStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RuelleStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const RuelleModel) -> Result<&'a RuelleModel, Failure> {
    unsafe { model.as_ref() }.ok_or(Failure::Null("model"))
}

unsafe fn out_slice<'a>(ptr: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(unsafe { slice::from_raw_parts_mut(ptr, len) })
}

unsafe fn write(ptr: *mut f64, value: f64, what: &'static str) -> Result<(), Failure> {
    unsafe { out_slice(ptr, 1, what) }?[0] = value;
    Ok(())
}

fn state_index(s: usize, n: usize) -> Result<usize, Error> {
    if s == 0 || s > n {
        return Err(Error::StateOutOfRange { state: s, n });
    }
    Ok(s - 1)
}

unsafe fn cylinder(
    model: &RuelleModel,
    ticks: *const u64,
    states: *const u32,
    len: usize,
) -> Result<CylinderSpec, Failure> {
    if len == 0 {
        return Ok(CylinderSpec::full());
    }
    if ticks.is_null() {
        return Err(Failure::Null("ticks"));
    }
    if states.is_null() {
        return Err(Failure::Null("states"));
    }
    let (ticks, states) = unsafe { (slice::from_raw_parts(ticks, len), slice::from_raw_parts(states, len)) };
    let n = model.model.n();
    let constraints = ticks
        .iter()
        .zip(states)
        .map(|(&t, &s)| Ok((TimePoint::from_ticks(t), state_index(s as usize, n)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(CylinderSpec::new(constraints)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ruelle_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ruelle_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Parse a JSON model file from NUL-terminated UTF-8 text.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ruelle_model_from_json(json: *const c_char, out: *mut *mut RuelleModel) -> RuelleStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| Error::InvalidArgument(format!("json is not UTF-8: {e}")))?;
        let model = Model::from_json(text)?;
        unsafe { *out = Box::into_raw(Box::new(RuelleModel { model, gibbs: OnceLock::new() })) };
        Ok(())
    })
}

/// Build a model from an `n * n` row-major generator (entry `(i, j)` is the
/// rate from `j` to `i`) and an optional potential of length `n`.
///
/// # Safety
/// `generator` must hold `n * n` values, `potential` is null or holds `n`
/// values, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ruelle_model_from_generator(
    n: usize,
    generator: *const f64,
    potential: *const f64,
    out: *mut *mut RuelleModel,
) -> RuelleStatus {
    guard(|| {
        if generator.is_null() {
            return Err(Failure::Null("generator"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let entries = unsafe { slice::from_raw_parts(generator, n * n) };
        let v = (!potential.is_null()).then(|| unsafe { slice::from_raw_parts(potential, n) }.to_vec());
        let file = ModelFile {
            convention: COLUMN_CONVENTION.to_string(),
            n,
            l: entries.chunks(n.max(1)).map(<[f64]>::to_vec).collect(),
            v,
            cylinders: Vec::new(),
            times: Vec::new(),
            perron: None,
        };
        if entries.iter().chain(file.v.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::Model("entries must be finite".into()).into());
        }
        let text = serde_json::to_string(&file).map_err(|e| Error::Model(e.to_string()))?;
        let model = Model::from_json(&text)?;
        unsafe { *out = Box::into_raw(Box::new(RuelleModel { model, gibbs: OnceLock::new() })) };
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ruelle_model_free(model: *mut RuelleModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ruelle_model_n(model: *const RuelleModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.model.n())
}

/// Write `e^{tL}` row-major into `out[n * n]`.
///
/// # Safety
/// `model` must be live and `out` must hold `n * n` values.
#[no_mangle]
pub unsafe extern "C" fn ruelle_semigroup(model: *const RuelleModel, t: f64, out: *mut f64) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let n = m.model.n();
        let p = semigroup(m.model.generator(), t)?;
        let out = unsafe { out_slice(out, n * n, "out") }?;
        for (k, x) in out.iter_mut().enumerate() {
            *x = p.prob(k / n, k % n);
        }
        Ok(())
    })
}

/// Write the stationary vector into `out[n]`.
///
/// # Safety
/// `model` must be live and `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ruelle_stationary(model: *const RuelleModel, out: *mut f64) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let out = unsafe { out_slice(out, m.model.n(), "out") }?;
        out.copy_from_slice(m.model.path.p0().as_slice());
        Ok(())
    })
}

/// Perron root and eigenvectors of `L + V`, normalized by `sum mu = 1` and
/// `sum u mu = 1`. Any of the outputs may be null.
///
/// # Safety
/// `model` must be live; non-null `u` and `mu` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ruelle_perron(
    model: *const RuelleModel,
    lambda: *mut f64,
    u: *mut f64,
    mu: *mut f64,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let triple = m.gibbs()?.triple();
        if !lambda.is_null() {
            unsafe { *lambda = triple.lambda() };
        }
        for (ptr, v) in [(u, triple.u()), (mu, triple.mu())] {
            if !ptr.is_null() {
                unsafe { out_slice(ptr, v.len(), "out") }?.copy_from_slice(v.as_slice());
            }
        }
        Ok(())
    })
}

/// Stationary path measure of the cylinder `{X_{ticks[k]} = states[k]}`.
///
/// # Safety
/// `model` must be live, `ticks` and `states` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ruelle_eval_p(
    model: *const RuelleModel,
    ticks: *const u64,
    states: *const u32,
    len: usize,
    out: *mut f64,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let c = unsafe { cylinder(m, ticks, states, len) }?;
        unsafe { write(out, m.model.path.eval_p(&c)?, "out") }
    })
}

/// Gibbs functional of a cylinder in the given mode.
///
/// # Safety
/// As for [`ruelle_eval_p`].
#[no_mangle]
pub unsafe extern "C" fn ruelle_eval_nu(
    model: *const RuelleModel,
    mode: RuelleNuMode,
    ticks: *const u64,
    states: *const u32,
    len: usize,
    out: *mut f64,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let c = unsafe { cylinder(m, ticks, states, len) }?;
        unsafe { write(out, m.gibbs()?.eval_nu(mode.into(), &c)?, "out") }
    })
}

/// The measure `rho = f_V nu` of a cylinder in the given mode.
///
/// # Safety
/// As for [`ruelle_eval_p`].
#[no_mangle]
pub unsafe extern "C" fn ruelle_eval_rho(
    model: *const RuelleModel,
    mode: RuelleNuMode,
    ticks: *const u64,
    states: *const u32,
    len: usize,
    out: *mut f64,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let c = unsafe { cylinder(m, ticks, states, len) }?;
        unsafe { write(out, m.gibbs()?.eval_rho(mode.into(), &c)?, "out") }
    })
}

/// Kolmogorov consistency defect of both functionals at time `t_ticks`.
///
/// # Safety
/// `model` must be live; `literal` and `h_transform` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ruelle_kolmogorov_defect(
    model: *const RuelleModel,
    t_ticks: u64,
    literal: *mut f64,
    h_transform: *mut f64,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let d = m.gibbs()?.kolmogorov_defect(TimePoint::from_ticks(t_ticks));
        unsafe { write(literal, d.literal, "literal") }?;
        unsafe { write(h_transform, d.h_transform, "h_transform") }
    })
}

/// Monte Carlo estimate of `e^{t(L+V)}` at entry `(j0, i0)` with its
/// standard error. The result depends only on `seed`.
///
/// # Safety
/// `model` must be live; `value` and `std_error` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ruelle_fk_estimate(
    model: *const RuelleModel,
    i0: u32,
    j0: u32,
    t: f64,
    n_paths: usize,
    seed: u64,
    value: *mut f64,
    std_error: *mut f64,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let n = m.model.n();
        let (i, j) = (state_index(i0 as usize, n)?, state_index(j0 as usize, n)?);
        let est = fk_estimate(m.model.generator(), &m.model.potential, i, j, t, n_paths, seed)?;
        unsafe { write(value, est.value, "value") }?;
        unsafe { write(std_error, est.std_error, "std_error") }
    })
}

/// Run the identity suites at the given times and return the JSON report
/// in `*out`. `*all_pass` (if non-null) is set to 1 when every identity
/// holds, else 0.
///
/// # Safety
/// `model` must be live, `t_ticks` must hold `n_times` values and `out`
/// must be valid. Free the string with [`ruelle_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ruelle_verify_json(
    model: *const RuelleModel,
    t_ticks: *const u64,
    n_times: usize,
    n_random: usize,
    seed: u64,
    all_pass: *mut i32,
    out: *mut *mut c_char,
) -> RuelleStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if t_ticks.is_null() || n_times == 0 {
            return Err(Error::InvalidArgument("at least one time is required".into()).into());
        }
        let times = unsafe { slice::from_raw_parts(t_ticks, n_times) }.iter().map(|&t| TimePoint::from_ticks(t));
        let report = run_verification(&m.model, &VerifyConfig::new(times.collect(), n_random, seed))?;
        let text = serde_json::to_string(&report).map_err(|e| Error::Model(e.to_string()))?;
        if !all_pass.is_null() {
            unsafe { *all_pass = i32::from(report.all_pass()) };
        }
        unsafe { *out = CString::new(text).expect("json has no nul").into_raw() };
        Ok(())
    })
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ruelle_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
