//! Linear score systems `psi(theta) = b - A theta` for regression, INAR and
//! diffusion data, and their variance-weighted second-step versions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::procsim::{SeriesKind, SeriesSample};
use crate::scalar::Real;
use crate::twostep::NuisanceEstimate;

/// Lower bound applied to conditional variances before weighting.
pub const VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Regression,
    Inar,
    Diffusion,
}

/// The affine score `psi(theta) = moment - gram * theta` averaged over
/// `n_eff` summands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearScoreSystem<T> {
    pub gram: Matrix<T>,
    pub moment: Vec<T>,
    pub n_eff: usize,
    pub model_tag: ModelTag,
}

impl<T: Real> LinearScoreSystem<T> {
    pub fn new(gram: Matrix<T>, moment: Vec<T>, n_eff: usize, model_tag: ModelTag) -> Result<Self> {
        if !gram.is_square() || gram.rows() != moment.len() {
            return Err(Error::Dimension {
                expected: gram.rows(),
                got: moment.len(),
            });
        }
        if n_eff == 0 {
            return Err(Error::InsufficientData("score system with no summands".into()));
        }
        Ok(Self {
            gram,
            moment,
            n_eff,
            model_tag,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    /// `b - A theta`.
    pub fn eval_score(&self, theta: &[T]) -> Result<Vec<T>> {
        let at = self.gram.mat_vec(theta)?;
        Ok(self.moment.iter().zip(at).map(|(&b, a)| b - a).collect())
    }

    /// The Hessian of the score, `-A`.
    pub fn hessian(&self) -> Matrix<T> {
        self.gram.scale(-T::one())
    }

    pub fn cast<U: Real>(&self) -> LinearScoreSystem<U> {
        LinearScoreSystem {
            gram: self.gram.cast(),
            moment: self.moment.iter().map(|&x| U::lit(x.to_f64_lossy())).collect(),
            n_eff: self.n_eff,
            model_tag: self.model_tag,
        }
    }
}

/// Response/covariate pairs shared by every model. The score of each model
/// is the least-squares score of this regression: INAR responds `X_t` to
/// its lags, the diffusion responds `(X_{t_k} - X_{t_{k-1}}) / delta` to
/// the left-endpoint state.
#[derive(Clone, Debug, PartialEq)]
pub struct Design<T> {
    covariates: Matrix<T>,
    response: Vec<T>,
    intercept: bool,
    model_tag: ModelTag,
    delta: Option<T>,
}

impl<T: Real> Design<T> {
    /// Plain linear regression without an intercept; add a constant column
    /// to `covariates` if one is wanted.
    pub fn regression(covariates: Matrix<T>, responses: Vec<T>) -> Result<Self> {
        if covariates.rows() != responses.len() {
            return Err(Error::Dimension {
                expected: covariates.rows(),
                got: responses.len(),
            });
        }
        if responses.is_empty() {
            return Err(Error::InsufficientData("regression needs n >= 1".into()));
        }
        Ok(Self {
            covariates,
            response: responses,
            intercept: false,
            model_tag: ModelTag::Regression,
            delta: None,
        })
    }

    /// INAR(p) design: covariates `(X_{t-1}, ..., X_{t-p})`, response `X_t`,
    /// with an intercept.
    pub fn inar(series: &SeriesSample<T>, order: usize) -> Result<Self> {
        if series.kind != SeriesKind::Counts {
            return Err(Error::InvalidArgument("INAR design needs a count series".into()));
        }
        if series.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: series.dim(),
            });
        }
        if order == 0 {
            return Err(Error::InvalidArgument("order must be >= 1".into()));
        }
        if series.lag_len() < order {
            return Err(Error::InsufficientData(format!(
                "lag buffer holds {} values, order {order} needs {order}",
                series.lag_len()
            )));
        }
        let n = series.len();
        if n == 0 {
            return Err(Error::InsufficientData("empty series".into()));
        }
        let mut cov = Matrix::zeros(n, order);
        let mut resp = Vec::with_capacity(n);
        for t in 0..n {
            let ti = t as isize;
            for i in 0..order {
                cov[(t, i)] = series.at(ti - 1 - i as isize, 0);
            }
            resp.push(series.at(ti, 0));
        }
        Ok(Self {
            covariates: cov,
            response: resp,
            intercept: true,
            model_tag: ModelTag::Inar,
            delta: None,
        })
    }

    /// Row `target` of a multivariate INAR(1): covariates `Y_{t-1}`,
    /// response `Y_{t,target}`, with an intercept.
    pub fn minar_row(series: &SeriesSample<T>, target: usize) -> Result<Self> {
        if series.kind != SeriesKind::Counts {
            return Err(Error::InvalidArgument("INAR design needs a count series".into()));
        }
        if target >= series.dim() {
            return Err(Error::InvalidArgument(format!("no coordinate {target}")));
        }
        if series.lag_len() < 1 {
            return Err(Error::InsufficientData("lag buffer is empty".into()));
        }
        let n = series.len();
        let d = series.dim();
        let mut cov = Matrix::zeros(n, d);
        let mut resp = Vec::with_capacity(n);
        for t in 0..n {
            let ti = t as isize;
            for j in 0..d {
                cov[(t, j)] = series.at(ti - 1, j);
            }
            resp.push(series.at(ti, target));
        }
        Ok(Self {
            covariates: cov,
            response: resp,
            intercept: true,
            model_tag: ModelTag::Inar,
            delta: None,
        })
    }

    /// Linear drift design: `path` holds `n + 1` samples of the target
    /// coordinate (column 0 is used), `covariate_path` the `n` left-endpoint
    /// covariate rows.
    pub fn diffusion(path: &SeriesSample<T>, covariate_path: &Matrix<T>) -> Result<Self> {
        Self::diffusion_column(path, 0, covariate_path)
    }

    pub fn diffusion_column(
        path: &SeriesSample<T>,
        column: usize,
        covariate_path: &Matrix<T>,
    ) -> Result<Self> {
        let delta = path
            .delta
            .ok_or_else(|| Error::InvalidArgument("diffusion path needs a sampling step".into()))?;
        if path.len() < 2 {
            return Err(Error::InsufficientData("diffusion path needs >= 2 points".into()));
        }
        let n = path.len() - 1;
        if covariate_path.rows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: covariate_path.rows(),
            });
        }
        let resp = (0..n)
            .map(|k| (path.values[(k + 1, column)] - path.values[(k, column)]) / delta)
            .collect();
        Ok(Self {
            covariates: covariate_path.clone(),
            response: resp,
            intercept: false,
            model_tag: ModelTag::Diffusion,
            delta: Some(delta),
        })
    }

    /// First-row design of a sampled OU system: target coordinate
    /// `column`, covariates the full state at left endpoints.
    pub fn ou_row(path: &SeriesSample<T>, column: usize) -> Result<Self> {
        if path.len() < 2 {
            return Err(Error::InsufficientData("diffusion path needs >= 2 points".into()));
        }
        let n = path.len() - 1;
        let d = path.dim();
        let cov = Matrix::from_row_major(n, d, path.values.as_slice()[..n * d].to_vec())?;
        Self::diffusion_column(path, column, &cov)
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.cols()
    }

    /// Dimension of the full parameter (intercept included).
    pub fn param_dim(&self) -> usize {
        self.covariates.cols() + usize::from(self.intercept)
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn model_tag(&self) -> ModelTag {
        self.model_tag
    }

    pub fn delta(&self) -> Option<T> {
        self.delta
    }

    pub fn covariates(&self) -> &Matrix<T> {
        &self.covariates
    }

    pub fn response(&self) -> &[T] {
        &self.response
    }

    /// Full design row at `t`: `(1, z_t)` with an intercept, else `z_t`.
    pub fn full_row_into(&self, t: usize, buf: &mut Vec<T>) {
        buf.clear();
        if self.intercept {
            buf.push(T::one());
        }
        buf.extend_from_slice(self.covariates.row(t));
    }

    /// Keep the listed observations, in order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("empty subset".into()));
        }
        let q = self.covariates.cols();
        let mut data = Vec::with_capacity(rows.len() * q);
        let mut resp = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.covariates.row(r));
            resp.push(self.response[r]);
        }
        Ok(Self {
            covariates: Matrix::from_row_major(rows.len(), q, data)?,
            response: resp,
            intercept: self.intercept,
            model_tag: self.model_tag,
            delta: self.delta,
        })
    }

    /// Score system on the full rows (intercept column included).
    pub fn score_system(&self) -> Result<LinearScoreSystem<T>> {
        let k = self.param_dim();
        let n = self.n();
        let mut gram = Matrix::zeros(k, k);
        let mut moment = vec![T::zero(); k];
        let mut row = Vec::with_capacity(k);
        for t in 0..n {
            self.full_row_into(t, &mut row);
            accumulate(&mut gram, &mut moment, &row, self.response[t], T::one());
        }
        finish(gram, moment, n, self.model_tag)
    }

    pub fn covariate_means(&self) -> (Vec<T>, T) {
        let n = T::from_usize_lossy(self.n());
        let q = self.covariates.cols();
        let mut zbar = vec![T::zero(); q];
        for t in 0..self.n() {
            for (m, &z) in zbar.iter_mut().zip(self.covariates.row(t)) {
                *m = *m + z;
            }
        }
        zbar.iter_mut().for_each(|m| *m = *m / n);
        let rbar = self.response.iter().copied().sum::<T>() / n;
        (zbar, rbar)
    }

    /// Score system of the mean-centered covariates against the centered
    /// response, without an intercept.
    pub fn centered_system(&self) -> Result<LinearScoreSystem<T>> {
        let (zbar, rbar) = self.covariate_means();
        let q = self.covariates.cols();
        let n = self.n();
        let mut gram = Matrix::zeros(q, q);
        let mut moment = vec![T::zero(); q];
        let mut row = vec![T::zero(); q];
        for t in 0..n {
            for ((r, &z), &m) in row.iter_mut().zip(self.covariates.row(t)).zip(&zbar) {
                *r = z - m;
            }
            accumulate(&mut gram, &mut moment, &row, self.response[t] - rbar, T::one());
        }
        finish(gram, moment, n, self.model_tag)
    }
}

/// Add `w * row rowᵀ` to the upper triangle of `gram` and `w * row * y` to
/// `moment`.
fn accumulate<T: Real>(gram: &mut Matrix<T>, moment: &mut [T], row: &[T], y: T, w: T) {
    let k = row.len();
    for i in 0..k {
        let wi = w * row[i];
        if wi == T::zero() {
            continue;
        }
        moment[i] = moment[i] + wi * y;
        let g = gram.row_mut(i);
        for j in i..k {
            g[j] = g[j] + wi * row[j];
        }
    }
}

fn finish<T: Real>(
    mut gram: Matrix<T>,
    mut moment: Vec<T>,
    n: usize,
    tag: ModelTag,
) -> Result<LinearScoreSystem<T>> {
    let k = moment.len();
    let inv_n = T::one() / T::from_usize_lossy(n);
    for i in 0..k {
        for j in i..k {
            let v = gram[(i, j)] * inv_n;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        moment[i] = moment[i] * inv_n;
    }
    LinearScoreSystem::new(gram, moment, n, tag)
}

pub fn build_regression_score<T: Real>(
    covariates: &Matrix<T>,
    responses: &[T],
) -> Result<LinearScoreSystem<T>> {
    Design::regression(covariates.clone(), responses.to_vec())?.score_system()
}

/// Dimension `order + 1`; index 0 is the innovation mean.
pub fn build_inar_score<T: Real>(series: &SeriesSample<T>, order: usize) -> Result<LinearScoreSystem<T>> {
    Design::inar(series, order)?.score_system()
}

pub fn build_diffusion_score<T: Real>(
    path: &SeriesSample<T>,
    covariate_path: &Matrix<T>,
) -> Result<LinearScoreSystem<T>> {
    Design::diffusion(path, covariate_path)?.score_system()
}

pub fn eval_score<T: Real>(sys: &LinearScoreSystem<T>, theta: &[T]) -> Result<Vec<T>> {
    sys.eval_score(theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsSummary<T> {
    pub min: T,
    pub max: T,
    /// Rows whose variance was raised to the floor.
    pub floored: usize,
}

/// `(1/n) sum w_t Y_{t,T} Y_{t,T}'` and `(1/n) sum w_t Y_{t,T} r_t` with
/// `w_t = 1 / sigma^2(Y_t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedScoreSystem<T> {
    pub gram_w: Matrix<T>,
    pub moment_w: Vec<T>,
    pub support: Vec<usize>,
    pub weights_summary: WeightsSummary<T>,
    pub n_eff: usize,
}

impl<T: Real> WeightedScoreSystem<T> {
    /// `moment_w - gram_w theta_T`.
    pub fn eval_score(&self, theta_support: &[T]) -> Result<Vec<T>> {
        let at = self.gram_w.mat_vec(theta_support)?;
        Ok(self.moment_w.iter().zip(at).map(|(&b, a)| b - a).collect())
    }
}

pub fn build_weighted_system<T: Real>(
    design: &Design<T>,
    support: &[usize],
    nuisance: &NuisanceEstimate<T>,
) -> Result<WeightedScoreSystem<T>> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("weighted system needs a nonempty support".into()));
    }
    let k = design.param_dim();
    if let Some(&bad) = support.iter().find(|&&j| j >= k) {
        return Err(Error::InvalidArgument(format!("support index {bad} out of range")));
    }
    let floor = T::lit(VARIANCE_FLOOR).max(nuisance.variance_floor);
    let s = support.len();
    let mut gram = Matrix::zeros(s, s);
    let mut moment = vec![T::zero(); s];
    let mut full = Vec::with_capacity(k);
    let mut restricted = vec![T::zero(); s];
    let mut wmin = T::infinity();
    let mut wmax = T::zero();
    let mut floored = 0usize;
    for t in 0..design.n() {
        design.full_row_into(t, &mut full);
        let var = nuisance.variance(&full)?;
        if var.is_nan() || var.is_infinite() {
            return Err(Error::Nuisance(format!("variance {var} at row {t}")));
        }
        let var = if var < floor {
            floored += 1;
            floor
        } else {
            var
        };
        let w = T::one() / var;
        wmin = wmin.min(w);
        wmax = wmax.max(w);
        for (r, &j) in restricted.iter_mut().zip(support) {
            *r = full[j];
        }
        accumulate(&mut gram, &mut moment, &restricted, design.response[t], w);
    }
    let sys = finish(gram, moment, design.n(), design.model_tag)?;
    Ok(WeightedScoreSystem {
        gram_w: sys.gram,
        moment_w: sys.moment,
        support: support.to_vec(),
        weights_summary: WeightsSummary {
            min: wmin,
            max: wmax,
            floored,
        },
        n_eff: design.n(),
    })
}

/// Per-observation score contributions, used by tests and diagnostics:
/// row `t` is `Y_t (r_t - theta' Y_t)`.
pub fn score_contributions<T: Real>(design: &Design<T>, theta: &[T]) -> Result<Matrix<T>> {
    let k = design.param_dim();
    if theta.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: theta.len(),
        });
    }
    let mut out = Matrix::zeros(design.n(), k);
    let mut row = Vec::with_capacity(k);
    for t in 0..design.n() {
        design.full_row_into(t, &mut row);
        let resid = design.response[t] - dot(&row, theta);
        for (o, &y) in out.row_mut(t).iter_mut().zip(&row) {
            *o = y * resid;
        }
    }
    Ok(out)
}
