//! Simulators for the data-generating processes: Poisson INAR(p),
//! multivariate Poisson INAR(1), Ornstein-Uhlenbeck systems and Hawkes
//! processes, plus the observed-series container they all produce.

mod hawkes;
mod inar;
mod minar;
mod ou;
mod series;

pub use hawkes::{bin_counts, simulate_hawkes, HawkesSpec, PiecewiseKernel};
pub use inar::{simulate_inar, InarSpec, DEFAULT_BURN_IN};
pub use minar::{simulate_minar1, Minar1Spec};
pub use ou::{diagonal_blocks, lyapunov_kronecker, simulate_ou, OuSpec, DEFAULT_SUBSTEPS, MAX_BLOCK};
pub use series::{SeriesKind, SeriesSample};
