//! Estimation of integrated volatility and integrated quarticity from
//! high-frequency prices observed with i.i.d. microstructure noise and
//! finite-activity jumps, using modulated bipower and multipower variation.
//!
//! The crate is split into:
//!
//! * [`constants`] closed-form constants of the limit theory (`μ_r`, `ν1`,
//!   `ν2`, CLT constants, variance-optimal tuning) and the exact
//!   finite-sample block variances they approximate;
//! * [`simulate`] stochastic-volatility and constant-volatility path
//!   generators with Gaussian noise and uniformly placed jumps;
//! * [`estimators`] block averages, MBV/MMV statistics, the bias-corrected
//!   MRV/MRQ/MBV(Z)/MTQ estimators and feasible inference;
//! * [`experiment`] a parallel, seed-deterministic Monte Carlo harness;
//! * [`io`] tick ingestion, previous-tick regularization and CSV output.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod io;
pub mod rng;
pub mod simulate;

pub use constants::{
    abs_moment, bias_constants, clt_constant_a, exact_block_variances, finite_sample_nu1, optimal_constants,
    BiasConstants, OptimalConstants, WindowDivisor,
};
pub use error::{Error, Result};
pub use estimators::{
    block_average, confidence_interval, feasible_variance, make_block_scheme, make_gamma_scheme, mbv, mbv_robust, mmv,
    mmv_gamma, mrq, mrv, mtq, omega_hat, standardized_iv_stat, Analysis, BlockScheme, Estimate, EstimatorOptions,
};
pub use experiment::{
    aggregate, histogram_export, run_experiment, EstimatorKind, ExperimentConfig, Histogram, JumpSpec, Model, Record,
    ResultRow, Suite,
};
pub use io::{load_ticks, regularize, ColumnSpec, RegularizeOptions, TickSeries, Transform};
pub use simulate::{
    add_jumps, add_noise, simulate_constant_vol_path, simulate_sv_path, Jump, Observations, SimPath, SvModelParams,
};
