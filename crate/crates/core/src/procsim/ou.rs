use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::series::SeriesSample;
use crate::error::{Error, Result};
use crate::linalg::{solve_general, Cholesky, Matrix};
use crate::rng::rng_from_seed;

pub const MAX_BLOCK: usize = 8;
pub const DEFAULT_SUBSTEPS: usize = 10;

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

/// Multivariate Ornstein-Uhlenbeck system `dY = A Y dt + diag(sigma) dW`
/// sampled every `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuSpec {
    pub a_matrix: Matrix<f64>,
    pub sigma_diag: Vec<f64>,
    pub delta: f64,
    pub n_steps: usize,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Fixed starting point; the stationary law is used when absent.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
}

impl OuSpec {
    pub fn new(a_matrix: Matrix<f64>, sigma_diag: Vec<f64>, delta: f64, n_steps: usize) -> Self {
        Self {
            a_matrix,
            sigma_diag,
            delta,
            n_steps,
            substeps: DEFAULT_SUBSTEPS,
            initial_state: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma_diag.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.a_matrix.rows() != d || self.a_matrix.cols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: self.a_matrix.rows(),
            });
        }
        if self.sigma_diag.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Domain("diffusion coefficients must be > 0".into()));
        }
        if !(self.delta > 0.0) || self.n_steps == 0 || self.substeps == 0 {
            return Err(Error::Domain(
                "delta, n_steps and substeps must be positive".into(),
            ));
        }
        if let Some(y0) = &self.initial_state {
            if y0.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: y0.len(),
                });
            }
        }
        // stability: A is Hurwitz iff A V + V A' = -I has a positive definite
        // solution
        for block in diagonal_blocks(&self.a_matrix)? {
            let sub = self.a_matrix.submatrix(&block);
            let v = lyapunov_kronecker(&sub, &Matrix::identity(block.len()))
                .map_err(|_| Error::Stationarity("drift matrix is not stable".into()))?;
            if Cholesky::factor(&v).is_err() {
                return Err(Error::Stationarity(
                    "drift matrix has an eigenvalue with nonnegative real part".into(),
                ));
            }
        }
        Ok(())
    }

    /// Stationary covariance `V` with `A V + V A' + Sigma Sigma' = 0`.
    pub fn stationary_covariance(&self) -> Result<Matrix<f64>> {
        let d = self.dim();
        let mut v = Matrix::zeros(d, d);
        for block in diagonal_blocks(&self.a_matrix)? {
            let sub = self.a_matrix.submatrix(&block);
            let q = Matrix::from_diag(
                &block
                    .iter()
                    .map(|&i| self.sigma_diag[i] * self.sigma_diag[i])
                    .collect::<Vec<_>>(),
            );
            let vb = lyapunov_kronecker(&sub, &q)?;
            for (a, &i) in block.iter().enumerate() {
                for (b, &j) in block.iter().enumerate() {
                    v[(i, j)] = vb[(a, b)];
                }
            }
        }
        Ok(v)
    }
}

/// Connected components of the sparsity pattern of `a`, each sorted. Errors
/// if a block exceeds `MAX_BLOCK`.
pub fn diagonal_blocks(a: &Matrix<f64>) -> Result<Vec<Vec<usize>>> {
    let d = a.rows();
    let mut label = vec![usize::MAX; d];
    let mut blocks = Vec::new();
    for start in 0..d {
        if label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        label[start] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..d {
                if label[j] == usize::MAX && (a[(i, j)] != 0.0 || a[(j, i)] != 0.0) {
                    label[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        if members.len() > MAX_BLOCK {
            return Err(Error::InvalidArgument(format!(
                "drift block of size {} exceeds the supported {MAX_BLOCK}",
                members.len()
            )));
        }
        blocks.push(members);
    }
    Ok(blocks)
}

/// Solve `A V + V A' + Q = 0` through the Kronecker form
/// `(I (x) A + A (x) I) vec(V) = -vec(Q)`.
pub fn lyapunov_kronecker(a: &Matrix<f64>, q: &Matrix<f64>) -> Result<Matrix<f64>> {
    let k = a.rows();
    let kk = k * k;
    let mut big = Matrix::zeros(kk, kk);
    // vec is column-major: index (i, j) -> j * k + i
    for i in 0..k {
        for j in 0..k {
            let row = j * k + i;
            for m in 0..k {
                // (A V)_{ij} = sum_m A_{im} V_{mj}
                big[(row, j * k + m)] += a[(i, m)];
                // (V A')_{ij} = sum_m V_{im} A_{jm}
                big[(row, m * k + i)] += a[(j, m)];
            }
        }
    }
    let rhs: Vec<f64> = (0..kk).map(|idx| -q[(idx % k, idx / k)]).collect();
    let vec_v = solve_general(&big, &rhs)
        .map_err(|e| Error::Numeric(format!("Lyapunov solve failed: {e}")))?;
    let mut v = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            v[(i, j)] = 0.5 * (vec_v[j * k + i] + vec_v[i * k + j]);
        }
    }
    Ok(v)
}

/// Euler-Maruyama path with `substeps` sub-intervals per `delta`, started
/// from the stationary law (or `initial_state`). Returns `n_steps + 1`
/// sampled points.
pub fn simulate_ou(spec: &OuSpec, seed: u64) -> Result<SeriesSample<f64>> {
    spec.validate()?;
    let d = spec.dim();
    let mut rng = rng_from_seed(seed);
    let mut y = match &spec.initial_state {
        Some(y0) => y0.clone(),
        None => {
            let chol = Cholesky::factor(&spec.stationary_covariance()?)
                .map_err(|e| Error::Numeric(format!("stationary covariance: {e}")))?;
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            lower_times(&chol, &z)
        }
    };
    let h = spec.delta / spec.substeps as f64;
    let sqrt_h = h.sqrt();
    let nz: Vec<Vec<(usize, f64)>> = (0..d)
        .map(|i| {
            (0..d)
                .filter(|&j| spec.a_matrix[(i, j)] != 0.0)
                .map(|j| (j, spec.a_matrix[(i, j)]))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity((spec.n_steps + 1) * d);
    out.extend_from_slice(&y);
    let mut next = vec![0.0; d];
    for _ in 0..spec.n_steps {
        for _ in 0..spec.substeps {
            for i in 0..d {
                let drift: f64 = nz[i].iter().map(|&(j, a)| a * y[j]).sum();
                let z: f64 = StandardNormal.sample(&mut rng);
                next[i] = y[i] + drift * h + spec.sigma_diag[i] * sqrt_h * z;
            }
            std::mem::swap(&mut y, &mut next);
        }
        out.extend_from_slice(&y);
    }
    SeriesSample::diffusion_path(Matrix::from_row_major(spec.n_steps + 1, d, out)?, spec.delta)
}

fn lower_times(chol: &Cholesky<f64>, z: &[f64]) -> Vec<f64> {
    let l = chol.lower();
    (0..z.len())
        .map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum())
        .collect()
}
