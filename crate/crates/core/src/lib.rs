//! Two-step sparse Z-estimation via the Dantzig selector.
//!
//! A first-step Dantzig selector on a linear score `psi(theta) = b - A theta`
//! picks a support; the nuisance (conditional variance) is estimated on that
//! support and plugged into a weighted estimating equation whose root is the
//! second-step estimator. Score builders are provided for linear
//! regression, Poisson INAR(p), rows of multivariate INAR(1) and linear
//! drift diffusions (Ornstein-Uhlenbeck); Hawkes processes are handled
//! through their binned counts.
//!
//! The numerical core is generic over [`Real`] (`f32`, `f64`); the aliases
//! below fix it to `f64`, which is what the simulators and the experiment
//! harness use.

// `!(x > 0)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dantzig;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod procsim;
pub mod rng;
pub mod scalar;
pub mod scorelab;
pub mod twostep;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type SeriesSample = procsim::SeriesSample<f64>;
pub type LinearScoreSystem = scorelab::LinearScoreSystem<f64>;
pub type WeightedScoreSystem = scorelab::WeightedScoreSystem<f64>;
pub type Design = scorelab::Design<f64>;
pub type DantzigFit = dantzig::DantzigFit<f64>;
pub type SupportEstimate = dantzig::SupportEstimate<f64>;
pub type CvReport = dantzig::CvReport<f64>;
pub type NuisanceEstimate = twostep::NuisanceEstimate<f64>;
pub type TwoStepFit = twostep::TwoStepFit<f64>;
pub type FInftyEstimate = diagnostics::FInftyEstimate<f64>;
pub type NormalityReport = diagnostics::NormalityReport<f64>;

pub type Matrix32 = linalg::Matrix<f32>;
pub type LinearScoreSystem32 = scorelab::LinearScoreSystem<f32>;
pub type DantzigFit32 = dantzig::DantzigFit<f32>;
