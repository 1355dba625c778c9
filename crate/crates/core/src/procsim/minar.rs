use serde::{Deserialize, Serialize};

use super::inar::{poisson_draw, DEFAULT_BURN_IN};
use super::series::{SeriesKind, SeriesSample};
use crate::error::{Error, Result};
use crate::linalg::{solve_general, Matrix};
use crate::rng::rng_from_seed;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Multivariate Poisson INAR(1): `Y_{t,j} | past ~ Poisson((eta + A Y_{t-1})_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minar1Spec {
    pub eta: Vec<f64>,
    pub a_matrix: Matrix<f64>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl Minar1Spec {
    pub fn new(eta: Vec<f64>, a_matrix: Matrix<f64>) -> Self {
        Self {
            eta,
            a_matrix,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// Block-diagonal `A = diag(block, ..., block)` with a constant intercept.
    pub fn block_diagonal(block: &Matrix<f64>, copies: usize, eta: f64) -> Self {
        let k = block.rows();
        let p = k * copies;
        let mut a = Matrix::zeros(p, p);
        for c in 0..copies {
            for i in 0..k {
                for j in 0..k {
                    a[(c * k + i, c * k + j)] = block[(i, j)];
                }
            }
        }
        Self::new(vec![eta; p], a)
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if self.a_matrix.rows() != p || self.a_matrix.cols() != p {
            return Err(Error::Dimension {
                expected: p,
                got: self.a_matrix.rows(),
            });
        }
        if self.eta.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::Domain("intercepts must be >= 0".into()));
        }
        if self.a_matrix.as_slice().iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Domain("coefficient matrix must be nonnegative".into()));
        }
        let worst = (0..p)
            .map(|i| self.a_matrix.row(i).iter().sum::<f64>())
            .fold(0.0, f64::max);
        if worst >= 1.0 {
            return Err(Error::Stationarity(format!(
                "max row sum of A is {worst}, must be < 1"
            )));
        }
        Ok(())
    }

    /// Stationary mean `m` solving `(I - A) m = eta`.
    pub fn stationary_mean(&self) -> Result<Vec<f64>> {
        let p = self.dim();
        let mut m = Matrix::identity(p);
        for i in 0..p {
            for j in 0..p {
                m[(i, j)] -= self.a_matrix[(i, j)];
            }
        }
        solve_general(&m, &self.eta)
    }
}

/// Simulate `n` observations of the `p`-vector process plus a one-row lag
/// buffer.
pub fn simulate_minar1(spec: &Minar1Spec, n: usize, seed: u64) -> Result<SeriesSample<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let p = spec.dim();
    // row-wise nonzero pattern; block designs are very sparse
    let nz: Vec<Vec<(usize, f64)>> = (0..p)
        .map(|i| {
            spec.a_matrix
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0.0)
                .map(|(j, a)| (j, *a))
                .collect()
        })
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut prev = vec![0.0; p];
    let mut cur = vec![0.0; p];
    let mut out = Vec::with_capacity((n + 1) * p);
    for step in 0..(spec.burn_in + 1 + n) {
        for j in 0..p {
            let rate = spec.eta[j] + nz[j].iter().map(|&(k, a)| a * prev[k]).sum::<f64>();
            cur[j] = poisson_draw(rate, &mut rng)?;
        }
        std::mem::swap(&mut prev, &mut cur);
        if step >= spec.burn_in {
            out.extend_from_slice(&prev);
        }
    }
    let values = out.split_off(p);
    SeriesSample::new(
        Matrix::from_row_major(n, p, values)?,
        Matrix::from_row_major(1, p, out)?,
        None,
        SeriesKind::Counts,
    )
}
