//! Period detection for irregularly sampled time series.
//!
//! The crate builds generalized F and leave-one-out CVF periodograms for
//! sinusoidal least squares and periodic-kernel Gaussian process models
//! (white, weighted and red noise), and attaches a p-value to every
//! periodogram entry. Each p-value is the tail probability of a linear
//! combination of independent chi-square(1) variables, evaluated with a
//! Barndorff-Nielsen saddlepoint approximation; Imhof integration, Monte
//! Carlo and the exact F distribution are available as cross-checks.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and thread pools live in the `sppgram` crate.

#![no_std]
// Float methods resolve to std whenever std is linked, leaving the libm trait import unused.
#![allow(unused_imports)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod covariance;
pub mod error;
pub mod exec;
pub mod lightcurve;
pub mod models;
pub mod optimize;
pub mod periodogram;
pub mod power;
pub mod quadform;
pub mod simulate;
pub mod special;
pub mod testing;

pub use covariance::{CorrKind, CorrMatrix, KernelParams};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use lightcurve::{LightCurve, PhasedCurve};
pub use models::{Family, FitConfig, FitResult, ModelSpec, NoiseModel, Objective, Statistic, TestMatrices};
pub use periodogram::{Detection, PeriodGrid, Periodogram, PeriodogramEntry};
pub use quadform::{QuadFormSpec, SaddlepointSolution};
pub use simulate::SimScenario;
pub use testing::{Evaluator, TestResult};

/// Square matrix type used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
