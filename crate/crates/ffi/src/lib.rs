//! C ABI for the `mbvol` estimators.
//!
//! Every function returns an [`MbvStatus`]; results go through out
//! pointers. On failure the message is available from
//! [`mbv_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mbvol::rng::{repetition_seed, stream_seed, Stream};
use mbvol::{
    abs_moment, add_jumps, add_noise, bias_constants, clt_constant_a, finite_sample_nu1, make_block_scheme,
    make_gamma_scheme, optimal_constants, simulate_constant_vol_path, simulate_sv_path, Analysis, Error,
    EstimatorOptions, Observations, SvModelParams,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbvStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    Index = 4,
    UndefinedStatistic = 5,
    Load = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbvModel {
    /// Stochastic volatility with the default parameters.
    Sv = 0,
    /// `dX = μ dt + dW`.
    ConstantVol = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbvEstimator {
    Mrv = 0,
    Mrq = 1,
    MbvRobust = 2,
    Mtq = 3,
}

/// Noisy observations `y_0..y_n`.
pub struct MbvObservations(Observations);

/// Block averages of one series under one block scheme.
pub struct MbvAnalysis(Analysis);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MbvScheme {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub c1_eff: f64,
    pub c2_eff: f64,
    pub gamma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MbvEstimate {
    pub value: f64,
    /// False for estimators without a feasible variance; the variance and
    /// interval fields are then NaN.
    pub has_variance: bool,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub omega2_hat: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MbvSimulation {
    pub iv: f64,
    pub iq: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MbvStatus {
    match err {
        Error::Domain(_) => MbvStatus::Domain,
        Error::Config(_) => MbvStatus::Config,
        Error::Index { .. } => MbvStatus::Index,
        Error::UndefinedStatistic(_) => MbvStatus::UndefinedStatistic,
        Error::Load { .. } => MbvStatus::Load,
        Error::Io(_) => MbvStatus::Io,
    }
}

struct Failure(MbvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MbvStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MbvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MbvStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MbvStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mbv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `len = n + 1` observed values into a new handle.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_observations_new(
    values: *const f64,
    len: usize,
    out: *mut *mut MbvObservations,
) -> MbvStatus {
    guard(|| {
        let y = slice(values, len, "values")?.to_vec();
        let obs = Observations::from_values(y)?;
        write(out, Box::into_raw(Box::new(MbvObservations(obs))), "out")
    })
}

/// Simulates one path on `n` intervals, adds N(0, omega2) noise and
/// `jump_count` jumps of standard deviation `h`. Same seeding as the
/// `simulate` subcommand.
///
/// # Safety
/// `out` must be writable; `truth` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mbv_simulate(
    model: MbvModel,
    n: usize,
    omega2: f64,
    jump_count: usize,
    h: f64,
    seed: u64,
    out: *mut *mut MbvObservations,
    truth: *mut MbvSimulation,
) -> MbvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rep = repetition_seed(seed, n, 0);
        let path_seed = stream_seed(rep, Stream::Path);
        let path = match model {
            MbvModel::Sv => simulate_sv_path(&SvModelParams::default(), n, path_seed)?,
            MbvModel::ConstantVol => simulate_constant_vol_path(SvModelParams::default().mu, n, path_seed)?,
        };
        let mut obs = add_noise(&path, omega2, stream_seed(rep, Stream::Noise))?;
        if jump_count > 0 {
            obs = add_jumps(&obs, jump_count, h, stream_seed(rep, Stream::Jumps))?;
        }
        if !truth.is_null() {
            truth.write(MbvSimulation { iv: path.iv, iq: path.iq });
        }
        write(out, Box::into_raw(Box::new(MbvObservations(obs))), "out")
    })
}

/// Number of values `n + 1`.
///
/// # Safety
/// `obs` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mbv_observations_len(obs: *const MbvObservations, out: *mut usize) -> MbvStatus {
    guard(|| {
        let obs = obs.as_ref().ok_or_else(|| null("obs"))?;
        write(out, obs.0.y.len(), "out")
    })
}

/// Copies up to `capacity` values into `buffer`.
///
/// # Safety
/// `obs` must be a live handle; `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mbv_observations_values(
    obs: *const MbvObservations,
    buffer: *mut f64,
    capacity: usize,
) -> MbvStatus {
    guard(|| {
        let obs = obs.as_ref().ok_or_else(|| null("obs"))?;
        let count = capacity.min(obs.0.y.len());
        if count > 0 {
            if buffer.is_null() {
                return Err(null("buffer"));
            }
            ptr::copy_nonoverlapping(obs.0.y.as_ptr(), buffer, count);
        }
        Ok(())
    })
}

/// # Safety
/// `obs` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mbv_observations_free(obs: *mut MbvObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Builds the block averages for tuning `(c1, c2)`. `gamma <= 0` selects
/// the balanced scheme, `0 < gamma < 1/2` the gamma scheme.
///
/// # Safety
/// `obs` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_analysis_new(
    obs: *const MbvObservations,
    c1: f64,
    c2: f64,
    gamma: f64,
    finite_sample_nu1: bool,
    out: *mut *mut MbvAnalysis,
) -> MbvStatus {
    guard(|| {
        let obs = obs.as_ref().ok_or_else(|| null("obs"))?;
        let n = obs.0.n;
        let scheme = if gamma > 0.0 { make_gamma_scheme(n, c1, c2, gamma)? } else { make_block_scheme(n, c1, c2)? };
        let analysis = Analysis::with_options(&obs.0, scheme, EstimatorOptions { finite_sample_nu1 })?;
        write(out, Box::into_raw(Box::new(MbvAnalysis(analysis))), "out")
    })
}

/// # Safety
/// `analysis` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mbv_analysis_free(analysis: *mut MbvAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_analysis_scheme(analysis: *const MbvAnalysis, out: *mut MbvScheme) -> MbvStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        let s = a.0.scheme();
        let scheme = MbvScheme { n: s.n, k: s.k, m: s.m, l: s.l, c1_eff: s.c1_eff, c2_eff: s.c2_eff, gamma: s.gamma };
        write(out, scheme, "out")
    })
}

/// Bias-corrected estimate. When the estimator has a feasible variance, the
/// two-sided interval at `level` (in `[0, 1)`) is filled in.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_analysis_estimate(
    analysis: *const MbvAnalysis,
    estimator: MbvEstimator,
    level: f64,
    out: *mut MbvEstimate,
) -> MbvStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        let est = match estimator {
            MbvEstimator::Mrv => a.0.mrv()?,
            MbvEstimator::Mrq => a.0.mrq()?,
            MbvEstimator::MbvRobust => a.0.mbv_robust()?,
            MbvEstimator::Mtq => a.0.mtq()?,
        };
        let result = match est.feasible_variance {
            Some(variance) => {
                let (lo, hi) = est.with_interval(level)?.ci.unwrap_or((f64::NAN, f64::NAN));
                MbvEstimate {
                    value: est.value,
                    has_variance: true,
                    variance,
                    ci_low: lo,
                    ci_high: hi,
                    omega2_hat: est.omega2_hat,
                }
            }
            None => MbvEstimate {
                value: est.value,
                has_variance: false,
                variance: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
                omega2_hat: est.omega2_hat,
            },
        };
        write(out, result, "out")
    })
}

/// Raw multipower statistic over `count` consecutive blocks, normalised for
/// the scheme the analysis was built with.
///
/// # Safety
/// `powers` must point to `count` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_analysis_multipower(
    analysis: *const MbvAnalysis,
    powers: *const f64,
    count: usize,
    out: *mut f64,
) -> MbvStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        let powers = slice(powers, count, "powers")?;
        let value = if a.0.scheme().gamma > 0.0 { a.0.mmv_gamma(powers)? } else { a.0.mmv(powers)? };
        write(out, value, "out")
    })
}

/// Studentized MRV error against a known integrated variance.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_analysis_standardized(
    analysis: *const MbvAnalysis,
    iv: f64,
    log_form: bool,
    out: *mut f64,
) -> MbvStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        write(out, a.0.standardized_iv_stat(iv, log_form)?, "out")
    })
}

/// `E|N(0,1)|^r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_abs_moment(r: f64, out: *mut f64) -> MbvStatus {
    guard(|| write(out, abs_moment(r)?, "out"))
}

/// # Safety
/// `nu1` and `nu2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_bias_constants(c1: f64, c2: f64, nu1: *mut f64, nu2: *mut f64) -> MbvStatus {
    guard(|| {
        let c = bias_constants(c1, c2)?;
        write(nu1, c.nu1, "nu1")?;
        write(nu2, c.nu2, "nu2")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_finite_sample_nu1(n: usize, c1: f64, c2: f64, out: *mut f64) -> MbvStatus {
    guard(|| write(out, finite_sample_nu1(n, c1, c2)?, "out"))
}

/// # Safety
/// `powers` must point to `count` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_clt_constant(powers: *const f64, count: usize, out: *mut f64) -> MbvStatus {
    guard(|| {
        let powers = slice(powers, count, "powers")?;
        write(out, clt_constant_a(powers)?, "out")
    })
}

/// Variance-optimal `(c1, c2)` for constant volatility `sigma` and noise
/// standard deviation `omega`.
///
/// # Safety
/// All out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbv_optimal_constants(
    omega: f64,
    sigma: f64,
    c1: *mut f64,
    c2: *mut f64,
    min_variance: *mut f64,
) -> MbvStatus {
    guard(|| {
        let o = optimal_constants(omega, sigma)?;
        write(c1, o.c1, "c1")?;
        write(c2, o.c2, "c2")?;
        write(min_variance, o.min_variance, "min_variance")
    })
}
