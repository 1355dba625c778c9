//! Compatibility-factor screening, normality tests and the error/selection
//! metrics reported by the experiments.

mod finfty;
mod metrics;
mod normality;

pub use finfty::{estimate_f_infinity, f_infinity_grid, FInftyEstimate, FInftyMethod, GRID_ORACLE_MAX_DIM};
pub use metrics::{selection_and_errors, MetricRecord};
pub use normality::{royston_test, shapiro_wilk, NormalityReport, NormalityTest, SW_MAX_N, SW_MIN_N};
