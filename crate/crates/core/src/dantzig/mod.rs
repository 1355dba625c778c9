//! The Dantzig selector: `min ||theta||_1` subject to
//! `||b - A theta||_inf <= lambda`, solved as a linear program, plus
//! thresholding into a support estimate and blocked cross-validation of
//! `lambda`.

pub(crate) mod cv;
pub mod simplex;

use serde::{Deserialize, Serialize};

pub(crate) use cv::first_step_coefficients;
pub use cv::{cross_validate_lambda, default_lambda_grid, log_grid, CvOptions, CvReport, ScoreMode};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, norm_l1, Matrix};
use crate::scalar::Real;
use crate::scorelab::LinearScoreSystem;
use simplex::{solve_lp, LpStatus, PivotRule, SimplexOptions};

/// Default threshold on first-step coefficients.
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DantzigStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DantzigFit<T> {
    pub theta_hat: Vec<T>,
    pub lambda: T,
    pub l1_objective: T,
    /// `lambda - ||b - A theta_hat||_inf`; nonnegative up to round-off when
    /// optimal.
    pub feasibility_slack: T,
    pub iterations: usize,
    pub status: DantzigStatus,
}

/// JSON shape of an exported fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitExport {
    pub theta_hat: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
    pub slack: f64,
    pub status: DantzigStatus,
}

impl<T: Real> DantzigFit<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == DantzigStatus::Optimal
    }

    /// The fit, or a numeric error if the solver did not reach optimality.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            DantzigStatus::Optimal => Ok(self),
            DantzigStatus::Infeasible => Err(Error::Numeric(format!(
                "Dantzig program infeasible at lambda = {}",
                self.lambda
            ))),
            DantzigStatus::IterationLimit => Err(Error::Numeric(format!(
                "simplex iteration limit reached after {} pivots",
                self.iterations
            ))),
        }
    }

    pub fn export(&self) -> FitExport {
        FitExport {
            theta_hat: self.theta_hat.iter().map(|x| x.to_f64_lossy()).collect(),
            lambda: self.lambda.to_f64_lossy(),
            objective: self.l1_objective.to_f64_lossy(),
            slack: self.feasibility_slack.to_f64_lossy(),
            status: self.status,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DantzigOptions {
    /// Pivot cap as a multiple of `4 p`.
    pub iteration_factor: usize,
    pub rule: PivotRule,
}

impl Default for DantzigOptions {
    fn default() -> Self {
        Self {
            iteration_factor: 50,
            rule: PivotRule::Bland,
        }
    }
}

pub fn solve_dantzig<T: Real>(sys: &LinearScoreSystem<T>, lambda: T) -> Result<DantzigFit<T>> {
    solve_dantzig_with(sys, lambda, &DantzigOptions::default())
}

/// Splits `theta = theta_plus - theta_minus` with both parts nonnegative:
///
/// ```text
/// min 1'(theta_plus + theta_minus)
///   s.t.  A theta_plus - A theta_minus <= b + lambda
///        -A theta_plus + A theta_minus <= lambda - b
/// ```
pub fn solve_dantzig_with<T: Real>(
    sys: &LinearScoreSystem<T>,
    lambda: T,
    opts: &DantzigOptions,
) -> Result<DantzigFit<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let p = sys.dim();
    let a = &sys.gram;
    let b = &sys.moment;
    let mut g = Matrix::zeros(2 * p, 2 * p);
    let mut h = vec![T::zero(); 2 * p];
    for i in 0..p {
        for j in 0..p {
            let v = a[(i, j)];
            g[(i, j)] = v;
            g[(i, p + j)] = -v;
            g[(p + i, j)] = -v;
            g[(p + i, p + j)] = v;
        }
        h[i] = b[i] + lambda;
        h[p + i] = lambda - b[i];
    }
    let c = vec![T::one(); 2 * p];
    let lp_opts = SimplexOptions {
        max_iterations: opts.iteration_factor * 4 * p.max(1),
        rule: opts.rule,
    };
    let sol = solve_lp(&c, &g, &h, &lp_opts)?;
    let status = match sol.status {
        LpStatus::Optimal => DantzigStatus::Optimal,
        LpStatus::Infeasible => DantzigStatus::Infeasible,
        LpStatus::IterationLimit => DantzigStatus::IterationLimit,
        LpStatus::Unbounded => {
            return Err(Error::Numeric("Dantzig program reported unbounded".into()))
        }
    };
    let theta: Vec<T> = (0..p).map(|j| sol.x[j] - sol.x[p + j]).collect();
    let resid = sys.eval_score(&theta)?;
    Ok(DantzigFit {
        l1_objective: norm_l1(&theta),
        feasibility_slack: lambda - norm_inf(&resid),
        theta_hat: theta,
        lambda,
        iterations: sol.iterations,
        status,
    })
}

/// `{ j : |theta_j| > tau }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate<T> {
    pub indices: Vec<usize>,
    pub threshold: T,
}

impl<T: Real> SupportEstimate<T> {
    pub fn from_coefficients(theta: &[T], tau: T) -> Self {
        Self {
            indices: theta
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > tau)
                .map(|(j, _)| j)
                .collect(),
            threshold: tau,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

pub fn threshold_support<T: Real>(fit: &DantzigFit<T>, tau: T) -> SupportEstimate<T> {
    SupportEstimate::from_coefficients(&fit.theta_hat, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorelab::ModelTag;
    use approx::assert_abs_diff_eq;

    fn system(a: &[Vec<f64>], b: &[f64]) -> LinearScoreSystem<f64> {
        LinearScoreSystem::new(Matrix::from_rows(a).unwrap(), b.to_vec(), 1, ModelTag::Regression)
            .unwrap()
    }

    #[test]
    fn large_lambda_gives_origin() {
        let sys = system(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[1.0, -0.5]);
        let fit = solve_dantzig(&sys, 1.0).unwrap();
        assert!(fit.is_optimal());
        assert_eq!(fit.theta_hat, vec![0.0, 0.0]);
        assert_eq!(fit.l1_objective, 0.0);
    }

    #[test]
    fn zero_lambda_identity() {
        let sys = system(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, -2.0]);
        let fit = solve_dantzig(&sys, 0.0).unwrap();
        assert!(fit.is_optimal());
        assert_abs_diff_eq!(fit.theta_hat[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.theta_hat[1], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_gram_zero_lambda_infeasible() {
        let sys = system(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, -1.0]);
        let fit = solve_dantzig(&sys, 0.0).unwrap();
        assert_eq!(fit.status, DantzigStatus::Infeasible);
        assert!(fit.into_optimal().is_err());
    }

    #[test]
    fn negative_lambda_rejected() {
        let sys = system(&[vec![1.0]], &[1.0]);
        assert!(solve_dantzig(&sys, -0.1).is_err());
    }

    #[test]
    fn strict_threshold() {
        let fit = DantzigFit {
            theta_hat: vec![0.3, 0.05, -0.2],
            lambda: 0.1,
            l1_objective: 0.55,
            feasibility_slack: 0.0,
            iterations: 0,
            status: DantzigStatus::Optimal,
        };
        assert_eq!(threshold_support(&fit, 0.05).indices, vec![0, 2]);
        let zero = DantzigFit {
            theta_hat: vec![0.0; 3],
            ..fit
        };
        assert!(threshold_support(&zero, 0.05).is_empty());
    }

    #[test]
    fn export_shape() {
        let sys = system(&[vec![1.0]], &[0.5]);
        let fit = solve_dantzig(&sys, 0.1).unwrap();
        let v = serde_json::to_value(fit.export()).unwrap();
        for key in ["theta_hat", "lambda", "objective", "slack", "status"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["status"], "optimal");
    }

    #[test]
    fn single_precision_solve() {
        let sys = system(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[1.0, 1.0]).cast::<f32>();
        let fit = solve_dantzig(&sys, 0.25f32).unwrap();
        assert!(fit.is_optimal());
        assert!((fit.l1_objective - 0.5).abs() < 1e-5);
    }
}
