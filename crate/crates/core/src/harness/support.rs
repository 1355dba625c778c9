use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CaseConfig, LambdaMode, ModelParams, SCHEMA_VERSION};
use super::run::{choose_lambda, design_for, simulate_series};
use crate::dantzig::{first_step_coefficients, DantzigOptions};
use crate::error::{Error, Result};
use crate::rng::replication_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HawkesRep {
    pub rep: usize,
    pub seed: u64,
    pub failed: bool,
    pub error: Option<String>,
    pub events: usize,
    pub lambda: f64,
    /// Selected lags, 1-based.
    pub selected_lags: Vec<usize>,
    pub s_hat: usize,
    pub tau_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HawkesSupportReport {
    pub schema: u32,
    pub reps: usize,
    pub base_seed: u64,
    pub delta: f64,
    pub order: usize,
    pub tau: f64,
    pub lambda_mode: LambdaMode,
    /// Right end of the kernel support.
    pub kernel_support: f64,
    pub successes: usize,
    pub failures: usize,
    pub mean_tau_hat: f64,
    /// Share of non-failed reps with `|tau_hat - kernel_support| <= 0.3 kernel_support`
    /// (with `kernel_support = 0`: share with `s_hat = 0`).
    pub within_30pct: f64,
    /// Share of all selected lags that are at most `ceil(kernel_support / delta) + 2`.
    pub selected_near_support: f64,
    pub records: Vec<HawkesRep>,
}

fn hawkes_rep(config: &CaseConfig, rep: usize) -> HawkesRep {
    let seed = replication_seed(config.base_seed, rep as u64);
    let mut out = HawkesRep {
        rep,
        seed,
        failed: false,
        error: None,
        events: 0,
        lambda: f64::NAN,
        selected_lags: Vec::new(),
        s_hat: 0,
        tau_hat: f64::NAN,
    };
    if let Err(e) = try_hawkes_rep(config, seed, &mut out) {
        out.failed = true;
        out.error = Some(e.to_string());
        out.tau_hat = f64::NAN;
    }
    out
}

fn try_hawkes_rep(config: &CaseConfig, seed: u64, out: &mut HawkesRep) -> Result<()> {
    let ModelParams::Hawkes { delta, .. } = &config.model else {
        return Err(Error::Config("not a hawkes config".into()));
    };
    let series = simulate_series(config, seed)?;
    out.events = series.values.as_slice().iter().chain(series.lag_buffer.as_slice()).sum::<f64>() as usize;
    let (design, _) = design_for(config, &series)?;
    let lambda = choose_lambda(config, &design)?;
    out.lambda = lambda;
    let (theta, fit) = first_step_coefficients(&design, lambda, config.score_mode, &DantzigOptions::default())?;
    fit.into_optimal()?;
    out.selected_lags = (1..theta.len()).filter(|&j| theta[j].abs() > config.tau).collect();
    out.s_hat = out.selected_lags.last().copied().unwrap_or(0);
    out.tau_hat = out.s_hat as f64 * delta;
    Ok(())
}

/// Bin a simulated Hawkes path, fit an INAR of the configured order and
/// read the support length off the largest selected lag.
pub fn run_hawkes_support(config: &CaseConfig, jobs: usize) -> Result<HawkesSupportReport> {
    config.validate()?;
    let ModelParams::Hawkes { spec, delta, order } = &config.model else {
        return Err(Error::Config("support experiment needs a hawkes model".into()));
    };
    let support = spec.kernel.effective_support();
    if (support / delta).ceil() as usize > *order {
        return Err(Error::Config(format!(
            "order {order} is shorter than the kernel support {support} / {delta}"
        )));
    }
    let records: Vec<HawkesRep> = super::pool(jobs)?.install(|| {
        (0..config.reps)
            .into_par_iter()
            .map(|r| hawkes_rep(config, r))
            .collect()
    });
    let ok: Vec<&HawkesRep> = records.iter().filter(|r| !r.failed).collect();
    let share = |hit: usize, total: usize| if total == 0 { f64::NAN } else { hit as f64 / total as f64 };
    let within = ok
        .iter()
        .filter(|r| {
            if support > 0.0 {
                (r.tau_hat - support).abs() <= 0.3 * support
            } else {
                r.s_hat == 0
            }
        })
        .count();
    let near_cut = (support / delta).ceil() as usize + 2;
    let all_lags: Vec<usize> = ok.iter().flat_map(|r| r.selected_lags.iter().copied()).collect();
    let near = all_lags.iter().filter(|&&l| l <= near_cut).count();
    let mean_tau = if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().map(|r| r.tau_hat).sum::<f64>() / ok.len() as f64
    };
    Ok(HawkesSupportReport {
        schema: SCHEMA_VERSION,
        reps: config.reps,
        base_seed: config.base_seed,
        delta: *delta,
        order: *order,
        tau: config.tau,
        lambda_mode: config.lambda_mode.clone(),
        kernel_support: support,
        successes: ok.len(),
        failures: records.len() - ok.len(),
        mean_tau_hat: mean_tau,
        within_30pct: share(within, ok.len()),
        selected_near_support: share(near, all_lags.len()),
        records,
    })
}
