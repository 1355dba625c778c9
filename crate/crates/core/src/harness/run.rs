use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CaseConfig, CaseId, LambdaMode, ModelParams, SCHEMA_VERSION};
use crate::dantzig::{cross_validate_lambda, default_lambda_grid, CvOptions, DantzigOptions};
use crate::diagnostics::{royston_test, selection_and_errors};
use crate::error::{Error, Result};
use crate::linalg::{norm_l2, Matrix};
use crate::procsim::{bin_counts, simulate_hawkes, simulate_inar, simulate_minar1, simulate_ou, SeriesSample};
use crate::rng::{replication_seed, rng_stream};
use crate::scorelab::Design;
use crate::twostep::{project_statistic, two_step_fit, TwoStepOptions};

/// Stream used for the projection direction, kept apart from the
/// replication draws.
const DIRECTION_STREAM: u64 = 0x5eed;
const Z975: f64 = 1.959_963_984_540_054;

/// One replication. Numeric fields are NaN (JSON `null`) when `failed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    pub failed: bool,
    pub error: Option<String>,
    pub lambda: f64,
    pub linf1: f64,
    pub l21: f64,
    pub sel: bool,
    pub linf2: f64,
    pub l22: f64,
    pub proj_stat: f64,
    /// Plug-in variance of `proj_stat`.
    pub proj_var: f64,
    pub support: Vec<usize>,
    /// Second-step estimates on the true support.
    pub theta_true_support: Vec<f64>,
    /// Whether the 95% interval covers the truth, per true-support
    /// coordinate.
    pub covered: Vec<bool>,
}

impl RepRecord {
    fn failure(rep: usize, seed: u64, lambda: f64, err: &Error) -> Self {
        Self {
            rep,
            seed,
            failed: true,
            error: Some(err.to_string()),
            lambda,
            linf1: f64::NAN,
            l21: f64::NAN,
            sel: false,
            linf2: f64::NAN,
            l22: f64::NAN,
            proj_stat: f64::NAN,
            proj_var: f64::NAN,
            support: Vec::new(),
            theta_true_support: Vec::new(),
            covered: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoystonSummary {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Second-step summaries over a subset of replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub reps_used: usize,
    pub mean_linf_two: f64,
    pub mean_l2_two: f64,
    pub coverage: f64,
    pub coverage_by_coord: Vec<f64>,
    pub proj_stat_mean: f64,
    pub proj_stat_var: f64,
    /// Mean plug-in variance of the projected statistic.
    pub proj_pred_var: f64,
    pub royston: Option<RoystonSummary>,
    pub royston_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub schema: u32,
    pub case_id: CaseId,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub tau: f64,
    pub lambda_mode: LambdaMode,
    pub theta_true: Vec<f64>,
    pub true_support: Vec<usize>,
    /// Unit projection direction over the full parameter.
    pub u: Vec<f64>,
    pub successes: usize,
    pub failures: usize,
    pub mean_lambda: f64,
    pub mean_linf_first: f64,
    pub mean_l2_first: f64,
    pub selection_proportion: f64,
    pub mean_linf_two: f64,
    pub mean_l2_two: f64,
    /// Royston test on the matrix of second-step estimates on the true
    /// support over all non-failed reps.
    pub royston_p: Option<f64>,
    pub unconditional: Summary,
    /// Restricted to reps whose selected support equals the truth.
    pub conditional: Summary,
    pub records: Vec<RepRecord>,
}

/// True parameter (intercept first for count models) and its support.
pub fn true_parameters(model: &ModelParams) -> (Vec<f64>, Vec<usize>, bool) {
    let (theta, intercept) = match model {
        ModelParams::Inar { spec } => {
            let mut t = vec![spec.mu_eps];
            t.extend_from_slice(&spec.alpha);
            (t, true)
        }
        ModelParams::Minar { spec, target } => {
            let mut t = vec![spec.eta[*target]];
            t.extend_from_slice(spec.a_matrix.row(*target));
            (t, true)
        }
        ModelParams::Ou { spec, target } => (spec.a_matrix.row(*target).to_vec(), false),
        ModelParams::Hawkes { order, .. } => (vec![0.0; order + 1], true),
    };
    let support = theta
        .iter()
        .enumerate()
        .filter(|&(j, v)| (intercept && j == 0) || *v != 0.0)
        .map(|(j, _)| j)
        .collect();
    (theta, support, intercept)
}

/// Unit vector drawn once from the base seed: `u = v / ||v||` with
/// `v_j ~ U[-1, 1]` on the slope coordinates, zero on the intercept.
pub fn projection_direction(base_seed: u64, dim: usize, intercept: bool) -> Vec<f64> {
    let mut rng = rng_stream(base_seed, DIRECTION_STREAM);
    let start = usize::from(intercept);
    let mut u = vec![0.0; dim];
    for x in u.iter_mut().skip(start) {
        *x = rng.random_range(-1.0..=1.0);
    }
    let norm = norm_l2(&u);
    for x in u.iter_mut() {
        *x /= norm;
    }
    u
}

/// One simulated series for `config`, as the fitting code sees it (Hawkes
/// paths are binned and split into lags and observations).
pub fn simulate_series(config: &CaseConfig, seed: u64) -> Result<SeriesSample<f64>> {
    match &config.model {
        ModelParams::Inar { spec } => simulate_inar(spec, config.n, seed),
        ModelParams::Minar { spec, .. } => simulate_minar1(spec, config.n, seed),
        ModelParams::Ou { spec, .. } => {
            let mut spec = spec.clone();
            spec.n_steps = config.n;
            simulate_ou(&spec, seed)
        }
        ModelParams::Hawkes { spec, delta, order } => {
            let events = simulate_hawkes(spec, seed)?;
            bin_counts(&events, *delta, spec.horizon)?.split_lag_buffer(*order)
        }
    }
}

/// Design of the configured target on `series`, with the `sqrt(n)` (or
/// `sqrt(n delta)`) scale of the projected statistic.
pub fn design_for(config: &CaseConfig, series: &SeriesSample<f64>) -> Result<(Design<f64>, f64)> {
    let design = match &config.model {
        ModelParams::Inar { spec } => Design::inar(series, spec.order())?,
        ModelParams::Minar { target, .. } => Design::minar_row(series, *target)?,
        ModelParams::Ou { target, .. } => Design::ou_row(series, *target)?,
        ModelParams::Hawkes { order, .. } => Design::inar(series, *order)?,
    };
    let n = design.n() as f64;
    let scale = match design.delta() {
        Some(d) => (n * d).sqrt(),
        None => n.sqrt(),
    };
    Ok((design, scale))
}

fn simulate_design(config: &CaseConfig, seed: u64) -> Result<(Design<f64>, f64)> {
    if matches!(config.model, ModelParams::Hawkes { .. }) {
        return Err(Error::Config(
            "hawkes configs run through the support experiment".into(),
        ));
    }
    design_for(config, &simulate_series(config, seed)?)
}

/// Fixed `lambda`, or the cross-validated choice on `design`.
pub fn choose_lambda(config: &CaseConfig, design: &Design<f64>) -> Result<f64> {
    match &config.lambda_mode {
        LambdaMode::Fixed { value } => Ok(*value),
        LambdaMode::Cv { grid, folds } => {
            let grid = match grid {
                Some(g) => g.clone(),
                None => default_lambda_grid(design, config.score_mode)?,
            };
            let opts = CvOptions {
                folds: *folds,
                mode: config.score_mode,
                dantzig: DantzigOptions::default(),
            };
            Ok(cross_validate_lambda(design, &grid, &opts)?.chosen_lambda)
        }
    }
}

struct Truth {
    theta: Vec<f64>,
    support: Vec<usize>,
    intercept: bool,
    u: Vec<f64>,
}

fn run_rep(config: &CaseConfig, truth: &Truth, rep: usize) -> RepRecord {
    let seed = replication_seed(config.base_seed, rep as u64);
    let mut lambda = f64::NAN;
    match try_rep(config, truth, rep, seed, &mut lambda) {
        Ok(r) => r,
        Err(e) => RepRecord::failure(rep, seed, lambda, &e),
    }
}

fn try_rep(config: &CaseConfig, truth: &Truth, rep: usize, seed: u64, lambda: &mut f64) -> Result<RepRecord> {
    let (design, scale) = simulate_design(config, seed)?;
    *lambda = choose_lambda(config, &design)?;
    let opts = TwoStepOptions {
        mode: config.score_mode,
        ..TwoStepOptions::default()
    };
    let fit = two_step_fit(&design, *lambda, config.tau, Some(&truth.support), &opts)?;
    // errors are measured on the slope coordinates
    let s = usize::from(truth.intercept);
    let slope_support = |idx: &[usize]| -> Vec<usize> { idx.iter().filter(|&&j| j >= s).map(|&j| j - s).collect() };
    let first = selection_and_errors(
        &fit.theta_first[s..],
        &truth.theta[s..],
        &slope_support(&fit.support.indices),
        &slope_support(&truth.support),
    )?;
    let second = selection_and_errors(&fit.theta_tilde[s..], &truth.theta[s..], &[], &[])?;
    let proj_stat = project_statistic(&fit, &truth.u, &truth.theta, scale)?;
    let proj_var = scale * scale * fit.projected_variance(&truth.u);
    let mut covered = Vec::with_capacity(truth.support.len());
    for &j in &truth.support {
        let ok = match fit.support.indices.iter().position(|&k| k == j) {
            Some(pos) => {
                let se = fit.asymp_cov[(pos, pos)].max(0.0).sqrt();
                (fit.theta_tilde[j] - truth.theta[j]).abs() <= Z975 * se
            }
            None => truth.theta[j] == 0.0,
        };
        covered.push(ok);
    }
    Ok(RepRecord {
        rep,
        seed,
        failed: false,
        error: None,
        lambda: *lambda,
        linf1: first.linf,
        l21: first.l2,
        sel: fit.selection_flag.unwrap_or(false),
        linf2: second.linf,
        l22: second.l2,
        proj_stat,
        proj_var,
        support: fit.support.indices.clone(),
        theta_true_support: truth.support.iter().map(|&j| fit.theta_tilde[j]).collect(),
        covered,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for x in xs {
        s += x;
        k += 1;
    }
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

fn summarize(records: &[&RepRecord], dim: usize) -> Summary {
    let k = records.len();
    let proj_mean = mean(records.iter().map(|r| r.proj_stat));
    let proj_var = if k > 1 {
        records.iter().map(|r| (r.proj_stat - proj_mean).powi(2)).sum::<f64>() / (k - 1) as f64
    } else {
        f64::NAN
    };
    let coverage_by_coord: Vec<f64> = (0..dim)
        .map(|c| mean(records.iter().map(|r| f64::from(u8::from(r.covered[c])))))
        .collect();
    let (royston, royston_error) = if k == 0 {
        (None, Some("no replications".to_string()))
    } else {
        let data: Vec<f64> = records
            .iter()
            .flat_map(|r| r.theta_true_support.iter().copied())
            .collect();
        match Matrix::from_row_major(k, dim, data).and_then(|m| royston_test(&m)) {
            Ok(rep) => (
                Some(RoystonSummary {
                    statistic: rep.statistic,
                    p_value: rep.p_value,
                    n: k,
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    Summary {
        reps_used: k,
        mean_linf_two: mean(records.iter().map(|r| r.linf2)),
        mean_l2_two: mean(records.iter().map(|r| r.l22)),
        coverage: mean(coverage_by_coord.iter().copied()),
        coverage_by_coord,
        proj_stat_mean: proj_mean,
        proj_stat_var: proj_var,
        proj_pred_var: mean(records.iter().map(|r| r.proj_var)),
        royston,
        royston_error,
    }
}

/// Run `config.reps` replications on a pool of `jobs` workers. Each rep
/// depends only on its own seed and results are aggregated in rep order,
/// so the report does not depend on `jobs`.
pub fn run_case(config: &CaseConfig, jobs: usize) -> Result<CaseReport> {
    config.validate()?;
    if matches!(config.model, ModelParams::Hawkes { .. }) {
        return Err(Error::Config(
            "hawkes configs run through the support experiment".into(),
        ));
    }
    let (theta, support, intercept) = true_parameters(&config.model);
    let u = projection_direction(config.base_seed, theta.len(), intercept);
    let truth = Truth {
        theta,
        support,
        intercept,
        u,
    };
    let records: Vec<RepRecord> = super::pool(jobs)?.install(|| {
        (0..config.reps)
            .into_par_iter()
            .map(|r| run_rep(config, &truth, r))
            .collect()
    });

    let ok: Vec<&RepRecord> = records.iter().filter(|r| !r.failed).collect();
    let selected: Vec<&RepRecord> = ok.iter().copied().filter(|r| r.sel).collect();
    let dim = truth.support.len();
    let unconditional = summarize(&ok, dim);
    let conditional = summarize(&selected, dim);
    Ok(CaseReport {
        schema: SCHEMA_VERSION,
        case_id: config.case_id,
        n: config.n,
        p: config.p,
        reps: config.reps,
        base_seed: config.base_seed,
        tau: config.tau,
        lambda_mode: config.lambda_mode.clone(),
        successes: ok.len(),
        failures: records.len() - ok.len(),
        mean_lambda: mean(ok.iter().map(|r| r.lambda)),
        mean_linf_first: mean(ok.iter().map(|r| r.linf1)),
        mean_l2_first: mean(ok.iter().map(|r| r.l21)),
        selection_proportion: selected.len() as f64 / config.reps as f64,
        mean_linf_two: unconditional.mean_linf_two,
        mean_l2_two: unconditional.mean_l2_two,
        royston_p: unconditional.royston.as_ref().map(|r| r.p_value),
        unconditional,
        conditional,
        theta_true: truth.theta,
        true_support: truth.support,
        u: truth.u,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_is_unit_and_skips_intercept() {
        let u = projection_direction(7, 11, true);
        assert_eq!(u[0], 0.0);
        assert!((norm_l2(&u) - 1.0).abs() < 1e-14);
        assert_eq!(u, projection_direction(7, 11, true));
        assert_ne!(u, projection_direction(8, 11, true));
    }

    #[test]
    fn truth_for_case_one() {
        let c = CaseConfig::builtin(CaseId::Case1, 100).unwrap();
        let (theta, support, intercept) = true_parameters(&c.model);
        assert!(intercept);
        assert_eq!(theta.len(), 11);
        assert_eq!(support, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_rep_aggregates_equal_record() {
        let mut c = CaseConfig::builtin(CaseId::Case1, 300).unwrap();
        c.reps = 1;
        c.lambda_mode = LambdaMode::Fixed { value: 0.5 };
        let r = run_case(&c, 1).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.successes + r.failures, 1);
        let rec = &r.records[0];
        assert!(!rec.failed, "{:?}", rec.error);
        assert_eq!(r.mean_linf_first, rec.linf1);
        assert_eq!(r.mean_l2_two, rec.l22);
        assert_eq!(r.selection_proportion, f64::from(u8::from(rec.sel)));
    }
}
