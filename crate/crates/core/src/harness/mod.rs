//! Monte Carlo experiment runner: replicated simulate / fit / score loops
//! with per-replication seeds, JSON reports, per-rep CSV and histogram
//! output.

mod config;
mod output;
mod run;
mod support;

pub use config::{
    case_alpha, case_block, ou_rate_lambda, CaseConfig, CaseId, LambdaMode, ModelParams, CASE_ETA,
    CASE_MU_EPS, DEFAULT_BASE_SEED, DEFAULT_REPS, SCHEMA_VERSION,
};
pub use output::{emit_histogram, write_histogram, write_records_csv, HistogramBin};
pub use run::{
    choose_lambda, design_for, projection_direction, run_case, simulate_series, true_parameters, CaseReport, RepRecord, RoystonSummary, Summary,
};
pub use support::{run_hawkes_support, HawkesRep, HawkesSupportReport};

use crate::error::{Error, Result};

/// Worker pool of `jobs` threads; `jobs == 0` is rejected.
pub(crate) fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::Config("jobs must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}
