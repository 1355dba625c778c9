//! Second stage: nuisance (variance) estimation on the selected support,
//! the variance-weighted estimating equation, and the plug-in covariance.

use serde::{Deserialize, Serialize};

use crate::dantzig::cv::first_step_coefficients;
use crate::dantzig::{DantzigFit, DantzigOptions, ScoreMode, SupportEstimate};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, Matrix};
use crate::procsim::SeriesSample;
use crate::scalar::Real;
use crate::scorelab::{build_weighted_system, Design, ModelTag, WeightedScoreSystem, WeightsSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceKind {
    /// `sigma^2(Y) = h'Y`, with `h` supported on the selected set.
    InarLinearVariance,
    /// Constant diffusion coefficient `sigma^2`.
    DiffusionConstantSigma2,
    /// A constant variance supplied by the caller.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuisanceEstimate<T> {
    pub kind: NuisanceKind,
    /// Full-length `h` for the linear model, a single value otherwise.
    pub values: Vec<T>,
    pub support: Vec<usize>,
    /// Lower bound applied to fitted variances on top of the absolute
    /// floor; zero unless set by the estimator.
    pub variance_floor: T,
}

impl<T: Real> NuisanceEstimate<T> {
    pub fn inar(h: Vec<T>, support: Vec<usize>) -> Self {
        Self {
            kind: NuisanceKind::InarLinearVariance,
            values: h,
            support,
            variance_floor: T::zero(),
        }
    }

    pub fn diffusion(sigma2: T) -> Self {
        Self {
            kind: NuisanceKind::DiffusionConstantSigma2,
            values: vec![sigma2],
            support: Vec::new(),
            variance_floor: T::zero(),
        }
    }

    pub fn fixed(sigma2: T) -> Self {
        Self {
            kind: NuisanceKind::Fixed,
            values: vec![sigma2],
            support: Vec::new(),
            variance_floor: T::zero(),
        }
    }

    pub fn with_floor(mut self, floor: T) -> Self {
        self.variance_floor = floor;
        self
    }

    /// Conditional variance at a full design row.
    pub fn variance(&self, row: &[T]) -> Result<T> {
        match self.kind {
            NuisanceKind::InarLinearVariance => {
                if self.values.len() != row.len() {
                    return Err(Error::Dimension {
                        expected: row.len(),
                        got: self.values.len(),
                    });
                }
                Ok(dot(&self.values, row))
            }
            NuisanceKind::DiffusionConstantSigma2 | NuisanceKind::Fixed => Ok(self.values[0]),
        }
    }
}

/// Share of the mean squared first-step residual below which a fitted
/// variance `h'Y` is raised.
pub const RELATIVE_VARIANCE_FLOOR: f64 = 0.05;

/// Solve the variance equation on `support`:
/// `h_T = (mean Y_T Y_T')^{-1} mean (r - theta_T' Y_T)^2 Y_T`, zero elsewhere.
///
/// Nothing keeps `h'Y` positive, and a row with a near-zero or negative fit
/// would receive an unbounded weight. The estimate therefore carries a
/// floor of `RELATIVE_VARIANCE_FLOOR` times the mean squared residual.
pub fn estimate_linear_variance<T: Real>(
    design: &Design<T>,
    support: &[usize],
    theta_first: &[T],
) -> Result<NuisanceEstimate<T>> {
    let k = design.param_dim();
    if theta_first.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: theta_first.len(),
        });
    }
    if support.is_empty() {
        return Err(Error::InvalidArgument("nuisance needs a nonempty support".into()));
    }
    let s = support.len();
    let mut gram = Matrix::zeros(s, s);
    let mut rhs = vec![T::zero(); s];
    let mut full = Vec::with_capacity(k);
    let mut yt = vec![T::zero(); s];
    let mut sse = T::zero();
    for t in 0..design.n() {
        design.full_row_into(t, &mut full);
        let mut fitted = T::zero();
        for (y, &j) in yt.iter_mut().zip(support) {
            *y = full[j];
            fitted = fitted + theta_first[j] * full[j];
        }
        let e = design.response()[t] - fitted;
        let e2 = e * e;
        sse = sse + e2;
        for i in 0..s {
            rhs[i] = rhs[i] + e2 * yt[i];
            for j in 0..s {
                gram[(i, j)] = gram[(i, j)] + yt[i] * yt[j];
            }
        }
    }
    let chol = Cholesky::factor(&gram)
        .map_err(|_| Error::Rank("restricted Gram matrix is singular".into()))?;
    let h_t = chol.solve(&rhs)?;
    let mut h = vec![T::zero(); k];
    for (&j, v) in support.iter().zip(h_t) {
        h[j] = v;
    }
    let floor = T::lit(RELATIVE_VARIANCE_FLOOR) * sse / T::from_usize_lossy(design.n());
    Ok(NuisanceEstimate::inar(h, support.to_vec()).with_floor(floor))
}

/// INAR(p) form of [`estimate_linear_variance`]; `support` indexes
/// `(intercept, lag 1, ..., lag p)`.
pub fn estimate_inar_nuisance<T: Real>(
    series: &SeriesSample<T>,
    order: usize,
    support: &SupportEstimate<T>,
    theta_first: &[T],
) -> Result<NuisanceEstimate<T>> {
    let design = Design::inar(series, order)?;
    estimate_linear_variance(&design, &support.indices, theta_first)
}

/// Quadratic-variation estimate `sum (X_{t_k} - X_{t_{k-1}})^2 / (n delta)`
/// of the constant diffusion coefficient, on column `column`.
pub fn estimate_diffusion_sigma2<T: Real>(
    path: &SeriesSample<T>,
    column: usize,
) -> Result<NuisanceEstimate<T>> {
    let delta = path
        .delta
        .ok_or_else(|| Error::InvalidArgument("diffusion path needs a sampling step".into()))?;
    if path.len() < 2 {
        return Err(Error::InsufficientData("need at least one increment".into()));
    }
    let n = path.len() - 1;
    let qv: T = (0..n)
        .map(|k| {
            let d = path.values[(k + 1, column)] - path.values[(k, column)];
            d * d
        })
        .sum();
    finish_sigma2(qv / (T::from_usize_lossy(n) * delta))
}

fn diffusion_sigma2_from_design<T: Real>(design: &Design<T>) -> Result<NuisanceEstimate<T>> {
    let delta = design
        .delta()
        .ok_or_else(|| Error::InvalidArgument("diffusion design without step".into()))?;
    // response is increment / delta
    let mean_sq = design.response().iter().map(|&r| r * r).sum::<T>()
        / T::from_usize_lossy(design.n());
    finish_sigma2(mean_sq * delta)
}

fn finish_sigma2<T: Real>(s2: T) -> Result<NuisanceEstimate<T>> {
    if !(s2 > T::zero()) {
        return Err(Error::DegenerateVariance(
            "path is constant; quadratic variation is zero".into(),
        ));
    }
    Ok(NuisanceEstimate::diffusion(s2))
}

/// Solve `gram_w theta_T = moment_w` by Cholesky.
pub fn solve_weighted<T: Real>(sys: &WeightedScoreSystem<T>) -> Result<Vec<T>> {
    let chol = Cholesky::factor(&sys.gram_w)
        .map_err(|_| Error::Rank("weighted Gram matrix is not positive definite".into()))?;
    let theta = chol.solve(&sys.moment_w)?;
    let resid = norm_inf(&sys.eval_score(&theta)?);
    let tol = T::lit(1e-8) * (T::one() + norm_inf(&sys.moment_w));
    if resid > tol {
        return Err(Error::Numeric(format!(
            "second-step residual {resid} exceeds {tol}"
        )));
    }
    Ok(theta)
}

/// How the second-step variance is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum NuisanceMode<T> {
    /// Linear variance for count models, quadratic variation for
    /// diffusions, unit variance for plain regression.
    Estimated,
    Fixed(T),
    /// Use the given estimate as is (e.g. the true `h`).
    Oracle(NuisanceEstimate<T>),
}

#[derive(Clone, Debug)]
pub struct TwoStepOptions<T> {
    pub mode: ScoreMode,
    pub nuisance: NuisanceMode<T>,
    pub dantzig: DantzigOptions,
}

impl<T> Default for TwoStepOptions<T> {
    fn default() -> Self {
        Self {
            mode: ScoreMode::Centered,
            nuisance: NuisanceMode::Estimated,
            dantzig: DantzigOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepFit<T> {
    /// Second-step support, indices into the full parameter (intercept at 0
    /// when present; it is always retained).
    pub support: SupportEstimate<T>,
    pub first_step: DantzigFit<T>,
    /// Full first-step coefficients (intercept refit by least squares).
    pub theta_first: Vec<T>,
    /// Second-step coefficients; exactly zero off the support.
    pub theta_tilde: Vec<T>,
    pub nuisance: NuisanceEstimate<T>,
    /// Plug-in covariance of `theta_tilde` on the support.
    pub asymp_cov: Matrix<T>,
    pub selection_flag: Option<bool>,
    /// No coordinate survived thresholding.
    pub empty_model: bool,
    pub weights_summary: Option<WeightsSummary<T>>,
    pub model_tag: ModelTag,
}

/// Sparse JSON shape of a two-step fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepExport {
    pub support: Vec<usize>,
    pub theta_tilde: Vec<(usize, f64)>,
    pub nuisance: NuisanceEstimate<f64>,
    pub cov: Vec<Vec<f64>>,
    pub selection_flag: Option<bool>,
}

impl<T: Real> TwoStepFit<T> {
    /// `u_T' Sigma u_T` over the support coordinates.
    pub fn projected_variance(&self, u: &[T]) -> T {
        let ut: Vec<T> = self.support.indices.iter().map(|&j| u[j]).collect();
        if ut.is_empty() {
            return T::zero();
        }
        self.asymp_cov.quad_form(&ut)
    }

    pub fn export(&self) -> TwoStepExport {
        let s = self.asymp_cov.rows();
        TwoStepExport {
            support: self.support.indices.clone(),
            theta_tilde: self
                .support
                .indices
                .iter()
                .map(|&j| (j, self.theta_tilde[j].to_f64_lossy()))
                .collect(),
            nuisance: NuisanceEstimate {
                kind: self.nuisance.kind,
                values: self.nuisance.values.iter().map(|v| v.to_f64_lossy()).collect(),
                support: self.nuisance.support.clone(),
                variance_floor: self.nuisance.variance_floor.to_f64_lossy(),
            },
            cov: (0..s)
                .map(|i| self.asymp_cov.row(i).iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
            selection_flag: self.selection_flag,
        }
    }
}

/// Dantzig first step, thresholding, nuisance estimation and the weighted
/// second step on `design`.
pub fn two_step_fit<T: Real>(
    design: &Design<T>,
    lambda: T,
    tau: T,
    reference_support: Option<&[usize]>,
    opts: &TwoStepOptions<T>,
) -> Result<TwoStepFit<T>> {
    if !(tau >= T::zero()) {
        return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
    }
    let (theta_first, first_step) = first_step_coefficients(design, lambda, opts.mode, &opts.dantzig)?;
    let first_step = first_step.into_optimal()?;

    let offset = usize::from(design.has_intercept() && opts.mode == ScoreMode::Centered);
    let mut indices: Vec<usize> = Vec::new();
    if design.has_intercept() {
        indices.push(0);
    }
    for (j, v) in first_step.theta_hat.iter().enumerate() {
        let full = j + offset;
        if v.abs() > tau && !(design.has_intercept() && full == 0) {
            indices.push(full);
        }
    }
    let support = SupportEstimate {
        indices,
        threshold: tau,
    };
    let selection_flag = reference_support.map(|r| {
        let mut r = r.to_vec();
        r.sort_unstable();
        r.dedup();
        r == support.indices
    });
    let k = design.param_dim();

    let nuisance = match &opts.nuisance {
        NuisanceMode::Fixed(s2) => NuisanceEstimate::fixed(*s2),
        NuisanceMode::Oracle(est) => est.clone(),
        NuisanceMode::Estimated => match design.model_tag() {
            ModelTag::Inar if !support.is_empty() => {
                estimate_linear_variance(design, &support.indices, &theta_first)?
            }
            ModelTag::Diffusion => diffusion_sigma2_from_design(design)?,
            _ => NuisanceEstimate::fixed(T::one()),
        },
    };

    if support.is_empty() {
        return Ok(TwoStepFit {
            support,
            first_step,
            theta_first,
            theta_tilde: vec![T::zero(); k],
            nuisance,
            asymp_cov: Matrix::zeros(0, 0),
            selection_flag,
            empty_model: true,
            weights_summary: None,
            model_tag: design.model_tag(),
        });
    }

    let wsys = build_weighted_system(design, &support.indices, &nuisance)?;
    let theta_t = solve_weighted(&wsys)?;
    let mut theta_tilde = vec![T::zero(); k];
    for (&j, &v) in support.indices.iter().zip(&theta_t) {
        theta_tilde[j] = v;
    }
    let info_scale = match (design.model_tag(), design.delta()) {
        (ModelTag::Diffusion, Some(d)) => T::from_usize_lossy(design.n()) * d,
        _ => T::from_usize_lossy(wsys.n_eff),
    };
    let asymp_cov = Cholesky::factor(&wsys.gram_w)?
        .inverse()?
        .scale(T::one() / info_scale);

    Ok(TwoStepFit {
        support,
        first_step,
        theta_first,
        theta_tilde,
        nuisance,
        asymp_cov,
        selection_flag,
        empty_model: false,
        weights_summary: Some(wsys.weights_summary),
        model_tag: design.model_tag(),
    })
}

/// `scale * u'(theta_tilde - theta_true)` for a unit vector `u`.
pub fn project_statistic<T: Real>(fit: &TwoStepFit<T>, u: &[T], theta_true: &[T], scale: T) -> Result<T> {
    let k = fit.theta_tilde.len();
    if u.len() != k || theta_true.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: u.len().min(theta_true.len()),
        });
    }
    let norm = dot(u, u).sqrt();
    if (norm - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) {
        return Err(Error::InvalidArgument(format!("projection vector has norm {norm}")));
    }
    let diff: Vec<T> = fit
        .theta_tilde
        .iter()
        .zip(theta_true)
        .map(|(&a, &b)| a - b)
        .collect();
    Ok(scale * dot(u, &diff))
}
