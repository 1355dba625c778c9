use serde::{Deserialize, Serialize};

use super::{solve_dantzig_with, DantzigOptions};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf};
use crate::scalar::Real;
use crate::scorelab::Design;

/// Which score system the first step is fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Mean-centered covariates and response, intercept recovered by least
    /// squares afterwards.
    Centered,
    /// Full rows including the intercept column.
    Raw,
}

#[derive(Clone, Copy, Debug)]
pub struct CvOptions {
    pub folds: usize,
    pub mode: ScoreMode,
    pub dantzig: DantzigOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            mode: ScoreMode::Centered,
            dantzig: DantzigOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport<T> {
    pub grid: Vec<T>,
    pub cv_loss: Vec<T>,
    pub chosen_lambda: T,
    pub folds: usize,
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            let f = T::from_usize_lossy(i) / T::from_usize_lossy(count - 1);
            (a + (b - a) * f).exp()
        })
        .collect()
}

/// 20 log-spaced points on `[0.01, 1] * ||b||_inf` of the full-data system.
pub fn default_lambda_grid<T: Real>(design: &Design<T>, mode: ScoreMode) -> Result<Vec<T>> {
    let sys = match mode {
        ScoreMode::Centered => design.centered_system()?,
        ScoreMode::Raw => design.score_system()?,
    };
    let top = norm_inf(&sys.moment);
    if !(top > T::zero()) {
        return Err(Error::Domain("score moment is zero; no lambda scale".into()));
    }
    Ok(log_grid(top * T::lit(0.01), top, 20))
}

/// Fit the first step on `design` and return the full coefficient vector
/// (intercept first when the design has one), with the intercept refit by
/// least squares given the slopes.
pub(crate) fn first_step_coefficients<T: Real>(
    design: &Design<T>,
    lambda: T,
    mode: ScoreMode,
    opts: &DantzigOptions,
) -> Result<(Vec<T>, super::DantzigFit<T>)> {
    match (mode, design.has_intercept()) {
        (ScoreMode::Centered, true) => {
            let sys = design.centered_system()?;
            let fit = solve_dantzig_with(&sys, lambda, opts)?;
            let (zbar, rbar) = design.covariate_means();
            let mut theta = Vec::with_capacity(design.param_dim());
            theta.push(rbar - dot(&zbar, &fit.theta_hat));
            theta.extend_from_slice(&fit.theta_hat);
            Ok((theta, fit))
        }
        _ => {
            let sys = design.score_system()?;
            let fit = solve_dantzig_with(&sys, lambda, opts)?;
            let mut theta = fit.theta_hat.clone();
            if design.has_intercept() {
                // refit the intercept given the slopes
                let (zbar, rbar) = design.covariate_means();
                theta[0] = rbar - dot(&zbar, &theta[1..]);
            }
            Ok((theta, fit))
        }
    }
}

fn prediction_loss<T: Real>(design: &Design<T>, rows: &[usize], theta: &[T]) -> T {
    let mut buf = Vec::with_capacity(design.param_dim());
    let mut total = T::zero();
    for &t in rows {
        design.full_row_into(t, &mut buf);
        let e = design.response()[t] - dot(&buf, theta);
        total = total + e * e;
    }
    total / T::from_usize_lossy(rows.len())
}

/// Contiguous-block K-fold cross-validation of `lambda`. The loss is the
/// mean squared one-step-ahead prediction error on the held-out block;
/// ties go to the larger `lambda`.
pub fn cross_validate_lambda<T: Real>(
    design: &Design<T>,
    grid: &[T],
    opts: &CvOptions,
) -> Result<CvReport<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidArgument("lambda grid must be sorted ascending".into()));
    }
    let k = opts.folds;
    if k < 2 {
        return Err(Error::InvalidArgument("cross-validation needs >= 2 folds".into()));
    }
    let n = design.n();
    if n < 2 * k {
        return Err(Error::InsufficientData(format!(
            "{n} observations are too few for {k} folds"
        )));
    }
    let bounds: Vec<usize> = (0..=k).map(|f| f * n / k).collect();
    let mut totals = vec![T::zero(); grid.len()];
    for f in 0..k {
        let valid: Vec<usize> = (bounds[f]..bounds[f + 1]).collect();
        let train: Vec<usize> = (0..bounds[f]).chain(bounds[f + 1]..n).collect();
        let train_design = design.subset(&train)?;
        for (gi, &lambda) in grid.iter().enumerate() {
            let loss = match first_step_coefficients(&train_design, lambda, opts.mode, &opts.dantzig) {
                Ok((theta, fit)) if fit.is_optimal() => prediction_loss(design, &valid, &theta),
                Ok(_) => T::infinity(),
                Err(e) => return Err(e),
            };
            totals[gi] = totals[gi] + loss;
        }
    }
    let kf = T::from_usize_lossy(k);
    let cv_loss: Vec<T> = totals.into_iter().map(|t| t / kf).collect();
    let mut best = 0usize;
    for (i, &l) in cv_loss.iter().enumerate() {
        if l <= cv_loss[best] {
            best = i;
        }
    }
    Ok(CvReport {
        chosen_lambda: grid[best],
        grid: grid.to_vec(),
        cv_loss,
        folds: k,
    })
}
