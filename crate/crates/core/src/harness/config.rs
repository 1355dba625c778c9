use serde::{Deserialize, Serialize};

use crate::dantzig::{ScoreMode, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::procsim::{HawkesSpec, InarSpec, Minar1Spec, OuSpec, PiecewiseKernel};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REPS: usize = 200;
pub const DEFAULT_BASE_SEED: u64 = 20_240_601;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
    Case4,
    Ou,
    Hawkes,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum LambdaMode {
    Fixed {
        value: f64,
    },
    /// Blocked cross-validation; without an explicit grid, 20 log-spaced
    /// points on `[0.01, 1] * ||b||_inf` of each replication's data.
    Cv {
        #[serde(default)]
        grid: Option<Vec<f64>>,
        #[serde(default = "default_folds")]
        folds: usize,
    },
}

fn default_folds() -> usize {
    5
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_mode() -> ScoreMode {
    ScoreMode::Centered
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

fn default_seed() -> u64 {
    DEFAULT_BASE_SEED
}

fn default_bins() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ModelParams {
    /// Univariate Poisson INAR fitted with order `alpha.len()`.
    Inar { spec: InarSpec },
    /// Row `target` of a multivariate Poisson INAR(1).
    Minar { spec: Minar1Spec, target: usize },
    /// Row `target` of the drift matrix of an OU system; `spec.n_steps`
    /// is overridden by the case's `n`.
    Ou { spec: OuSpec, target: usize },
    /// Hawkes process binned at `delta` and fitted as INAR(`order`).
    Hawkes {
        spec: HawkesSpec,
        delta: f64,
        order: usize,
    },
}

/// One experiment: `reps` replications of simulate / fit / score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case_id: CaseId,
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub lambda_mode: LambdaMode,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default = "default_mode")]
    pub score_mode: ScoreMode,
    #[serde(default = "default_bins")]
    pub hist_bins: usize,
    pub model: ModelParams,
}

// Shape and domain problems in a model spec are config errors; stationarity
// failures keep their numeric kind.
fn as_config(e: Error) -> Error {
    match e {
        Error::Dimension { .. } | Error::Domain(_) => Error::Config(e.to_string()),
        e => e,
    }
}

/// The 4x4 block of the multivariate count experiments.
pub fn case_block() -> Matrix<f64> {
    Matrix::from_rows(&[
        vec![0.3, 0.2, 0.2, 0.2],
        vec![0.2, 0.3, 0.2, 0.2],
        vec![0.0, 0.2, 0.3, 0.2],
        vec![0.0, 0.0, 0.2, 0.3],
    ])
    .expect("fixed block")
}

pub fn case_alpha(p: usize) -> Vec<f64> {
    let mut a = vec![0.0; p];
    a[..4].copy_from_slice(&[0.3, 0.2, 0.2, 0.2]);
    a
}

pub const CASE_MU_EPS: f64 = 0.5;
pub const CASE_ETA: f64 = 0.5;

impl CaseConfig {
    /// Built-in scenario with its pinned parameters; `n` is the sample
    /// size (number of sampled increments for `ou`, ignored for `hawkes`).
    pub fn builtin(case_id: CaseId, n: usize) -> Result<Self> {
        let cv = LambdaMode::Cv {
            grid: None,
            folds: 5,
        };
        let (p, model, lambda_mode) = match case_id {
            CaseId::Case1 | CaseId::Case2 => {
                let p = if case_id == CaseId::Case1 { 10 } else { 20 };
                let spec = InarSpec::new(CASE_MU_EPS, case_alpha(p));
                (p, ModelParams::Inar { spec }, cv)
            }
            CaseId::Case3 | CaseId::Case4 => {
                let p = if case_id == CaseId::Case3 { 100 } else { 200 };
                let spec = Minar1Spec::block_diagonal(&case_block(), p / 4, CASE_ETA);
                (p, ModelParams::Minar { spec, target: 0 }, cv)
            }
            CaseId::Ou => {
                // drift blocks B - I with B the count-model block; 5 blocks
                let mut block = case_block();
                for i in 0..4 {
                    block[(i, i)] -= 1.0;
                }
                let copies = 5;
                let d = 4 * copies;
                let mut a = Matrix::zeros(d, d);
                for c in 0..copies {
                    for i in 0..4 {
                        for j in 0..4 {
                            a[(4 * c + i, 4 * c + j)] = block[(i, j)];
                        }
                    }
                }
                let delta = 0.05;
                let spec = OuSpec::new(a, vec![1.0; d], delta, n);
                let lambda = ou_rate_lambda(d, n, delta);
                (d - 1, ModelParams::Ou { spec, target: 0 }, LambdaMode::Fixed { value: lambda })
            }
            CaseId::Hawkes => {
                let spec = HawkesSpec {
                    eta: 1.0,
                    kernel: PiecewiseKernel::boxcar(0.8, 1.0),
                    horizon: 4000.0,
                };
                let model = ModelParams::Hawkes {
                    spec,
                    delta: 0.1,
                    order: 20,
                };
                (20, model, cv)
            }
            CaseId::Custom => {
                return Err(Error::Config("custom cases need a config file".into()));
            }
        };
        Ok(Self {
            case_id,
            n,
            p,
            reps: DEFAULT_REPS,
            lambda_mode,
            tau: DEFAULT_TAU,
            base_seed: DEFAULT_BASE_SEED,
            score_mode: ScoreMode::Centered,
            hist_bins: default_bins(),
            model,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Config("tau must be >= 0".into()));
        }
        match &self.lambda_mode {
            LambdaMode::Fixed { value } if !(*value >= 0.0) => {
                return Err(Error::Config("lambda must be >= 0".into()))
            }
            LambdaMode::Cv { folds, grid } => {
                if *folds < 2 {
                    return Err(Error::Config("cv needs >= 2 folds".into()));
                }
                if let Some(g) = grid {
                    if g.is_empty() || g.windows(2).any(|w| !(w[1] >= w[0])) {
                        return Err(Error::Config("cv grid must be nonempty and ascending".into()));
                    }
                }
            }
            _ => {}
        }
        let model_p = match &self.model {
            ModelParams::Inar { spec } => {
                spec.validate().map_err(as_config)?;
                spec.order()
            }
            ModelParams::Minar { spec, target } => {
                spec.validate().map_err(as_config)?;
                if *target >= spec.dim() {
                    return Err(Error::Config(format!("target row {target} out of range")));
                }
                spec.dim()
            }
            ModelParams::Ou { spec, target } => {
                let d = spec.dim();
                if spec.a_matrix.rows() != d || spec.a_matrix.cols() != d || spec.sigma_diag.len() != d
                {
                    return Err(Error::Config(format!(
                        "ou needs a square drift matrix and {d} diffusion coefficients"
                    )));
                }
                if *target >= spec.dim() {
                    return Err(Error::Config(format!("target row {target} out of range")));
                }
                spec.dim() - 1
            }
            ModelParams::Hawkes { spec, delta, order } => {
                spec.validate().map_err(as_config)?;
                if !(*delta > 0.0) || *order == 0 {
                    return Err(Error::Config("hawkes needs delta > 0 and order >= 1".into()));
                }
                *order
            }
        };
        if model_p != self.p {
            return Err(Error::Config(format!(
                "p = {} does not match the model dimension {model_p}",
                self.p
            )));
        }
        if self.n == 0 && !matches!(self.model, ModelParams::Hawkes { .. }) {
            return Err(Error::Config("n must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `lambda = sqrt(log(d) / (n delta))`, the default for drift rows.
pub fn ou_rate_lambda(d: usize, n: usize, delta: f64) -> f64 {
    ((d as f64).ln() / (n as f64 * delta)).sqrt()
}
