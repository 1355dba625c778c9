use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, norm_l1, Matrix};
use crate::rng::rng_from_seed;
use crate::scalar::Real;

/// Largest dimension for which the grid search is offered.
pub const GRID_ORACLE_MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FInftyMethod {
    ConeSampling,
    GridOracle,
}

/// Estimate of `inf_{v in C_T \ 0} |v'Mv| / (||v_T||_1 ||v||_inf)` over the
/// cone `C_T = { ||v_{T^c}||_1 <= ||v_T||_1 }`. Sampling only ever
/// evaluates feasible directions, so `value` is an upper bound on the
/// infimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FInftyEstimate<T> {
    pub value: T,
    pub method: FInftyMethod,
    pub samples: usize,
    pub support: Vec<usize>,
}

fn cone_ratio<T: Real>(m: &Matrix<T>, v: &[T], support: &[usize]) -> T {
    let vt: T = support.iter().map(|&j| v[j].abs()).sum();
    let denom = vt * norm_inf(v);
    if !(denom > T::zero()) {
        return T::infinity();
    }
    m.quad_form(v).abs() / denom
}

/// Shrink the off-support part so that `v` lies in the cone.
fn project_into_cone<T: Real>(v: &mut [T], support: &[usize], in_support: &[bool]) {
    let vt: T = support.iter().map(|&j| v[j].abs()).sum();
    let off: T = v
        .iter()
        .zip(in_support)
        .filter(|(_, s)| !**s)
        .map(|(x, _)| x.abs())
        .sum();
    if off > vt && off > T::zero() {
        let f = vt / off;
        for (x, s) in v.iter_mut().zip(in_support) {
            if !*s {
                *x = *x * f;
            }
        }
    }
}

fn check_inputs<T: Real>(m: &Matrix<T>, support: &[usize]) -> Result<Vec<bool>> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let p = m.rows();
    if support.is_empty() {
        return Err(Error::InvalidArgument("support must be nonempty".into()));
    }
    let mut in_support = vec![false; p];
    for &j in support {
        if j >= p {
            return Err(Error::InvalidArgument(format!("support index {j} >= {p}")));
        }
        in_support[j] = true;
    }
    Ok(in_support)
}

/// Random search over the cone. Even-numbered candidates are fresh draws
/// (`v_T` uniform on the sphere, `v_{T^c}` a random direction with
/// `||v_{T^c}||_1 = u ||v_T||_1`, `u ~ U[0,1]`); odd-numbered candidates
/// perturb the incumbent with a step that shrinks over time. The candidate
/// sequence does not depend on `n_samples`, so the returned running
/// minimum is nonincreasing in `n_samples`.
pub fn estimate_f_infinity<T: Real>(
    m: &Matrix<T>,
    support: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<FInftyEstimate<T>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let in_support = check_inputs(m, support)?;
    let p = m.rows();
    let mut rng = rng_from_seed(seed);
    let mut best_v: Vec<T> = Vec::new();
    let mut best = T::infinity();
    let mut v = vec![T::zero(); p];
    for i in 0..n_samples {
        if i % 2 == 0 || best_v.is_empty() {
            for x in v.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *x = T::lit(g);
            }
            let st = support
                .iter()
                .map(|&j| v[j] * v[j])
                .fold(T::zero(), |a, b| a + b)
                .sqrt();
            let vt_l1: T = support.iter().map(|&j| v[j].abs() / st).sum();
            let off: T = v
                .iter()
                .zip(&in_support)
                .filter(|(_, s)| !**s)
                .map(|(x, _)| x.abs())
                .sum();
            let u: f64 = rng.random();
            let target = T::lit(u) * vt_l1;
            for (x, s) in v.iter_mut().zip(&in_support) {
                if *s {
                    *x = *x / st;
                } else if off > T::zero() {
                    *x = *x * target / off;
                }
            }
        } else {
            let step = T::lit(0.5 / (1.0 + (i as f64).sqrt() / 4.0));
            let scale = norm_inf(&best_v);
            for (x, b) in v.iter_mut().zip(&best_v) {
                let g: f64 = StandardNormal.sample(&mut rng);
                *x = *b + step * scale * T::lit(g);
            }
            project_into_cone(&mut v, support, &in_support);
        }
        let r = cone_ratio(m, &v, support);
        if r < best {
            best = r;
            best_v.clone_from(&v);
        }
    }
    Ok(FInftyEstimate {
        value: if best.is_finite() { best } else { T::zero() },
        method: FInftyMethod::ConeSampling,
        samples: n_samples,
        support: support.to_vec(),
    })
}

/// Exhaustive grid over the faces of the cube `||v||_inf = 1`, keeping
/// points inside the cone. Only for `p <= 3`.
pub fn f_infinity_grid<T: Real>(
    m: &Matrix<T>,
    support: &[usize],
    resolution: usize,
) -> Result<FInftyEstimate<T>> {
    check_inputs(m, support)?;
    let p = m.rows();
    if p > GRID_ORACLE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "grid oracle supports p <= {GRID_ORACLE_MAX_DIM}, got {p}"
        )));
    }
    let res = resolution.max(2);
    let free = p - 1;
    let mut best = T::infinity();
    let mut count = 0usize;
    let mut v = vec![T::zero(); p];
    let total = res.pow(free as u32);
    for face in 0..p {
        for sign in [-1.0, 1.0] {
            for idx in 0..total {
                let mut rem = idx;
                let mut k = 0;
                for (j, x) in v.iter_mut().enumerate() {
                    if j == face {
                        *x = T::lit(sign);
                    } else {
                        let g = rem % res;
                        rem /= res;
                        *x = T::lit(-1.0 + 2.0 * g as f64 / (res - 1) as f64);
                        k += 1;
                    }
                }
                debug_assert_eq!(k, free);
                let vt: T = support.iter().map(|&j| v[j].abs()).sum();
                let off = norm_l1(&v) - vt;
                if off > vt {
                    continue;
                }
                count += 1;
                let r = cone_ratio(m, &v, support);
                if r < best {
                    best = r;
                }
            }
        }
    }
    Ok(FInftyEstimate {
        value: if best.is_finite() { best } else { T::zero() },
        method: FInftyMethod::GridOracle,
        samples: count,
        support: support.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix() {
        let est = estimate_f_infinity(&Matrix::<f64>::zeros(3, 3), &[0], 50, 1).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn identity_two_dim() {
        let est = estimate_f_infinity(&Matrix::<f64>::identity(2), &[0], 2000, 5).unwrap();
        assert!((est.value - 1.0).abs() <= 0.02, "{}", est.value);
        let grid = f_infinity_grid(&Matrix::<f64>::identity(2), &[0], 401).unwrap();
        assert!((grid.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_limited_to_small_p() {
        assert!(f_infinity_grid(&Matrix::<f64>::identity(4), &[0], 11).is_err());
    }

    #[test]
    fn bad_support() {
        assert!(estimate_f_infinity(&Matrix::<f64>::identity(2), &[], 10, 1).is_err());
        assert!(estimate_f_infinity(&Matrix::<f64>::identity(2), &[2], 10, 1).is_err());
    }
}
