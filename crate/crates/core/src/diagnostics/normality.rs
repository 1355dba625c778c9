//! Shapiro-Wilk W (Royston's AS R94 approximation) and Royston's
//! multivariate H test built from the marginal W statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const SW_MIN_N: usize = 3;
pub const SW_MAX_N: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalityTest {
    ShapiroWilk,
    RoystonH,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport<T> {
    pub statistic: T,
    pub p_value: T,
    pub test: NormalityTest,
    pub dimension: usize,
    pub n: usize,
}

// AS R94 polynomial coefficients, ascending powers.
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly<T: Real>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::lit(ci))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn upper_tail<T: Real>(z: T) -> T {
    T::lit(std_normal().sf(z.to_f64_lossy()))
}

/// Shapiro-Wilk coefficients for the lower half of the ordered sample,
/// returned positive: `W = (sum_i a_i (x_(n+1-i) - x_(i)))^2 / SS`.
fn sw_coefficients<T: Real>(n: usize) -> Vec<T> {
    let nn2 = n / 2;
    if n == 3 {
        return vec![T::lit(std::f64::consts::FRAC_1_SQRT_2)];
    }
    let normal = std_normal();
    let an = n as f64;
    let m: Vec<T> = (1..=nn2)
        .map(|i| T::lit(normal.inverse_cdf((i as f64 - 0.375) / (an + 0.25))))
        .collect();
    let summ2 = T::lit(2.0) * m.iter().map(|&v| v * v).sum::<T>();
    let ssumm2 = summ2.sqrt();
    let rsn = T::lit(1.0 / an.sqrt());
    let two = T::lit(2.0);
    let a1 = poly::<T>(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![T::zero(); nn2];
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly::<T>(&C2, rsn);
        let num = summ2 - two * m[0] * m[0] - two * m[1] * m[1];
        let den = T::one() - two * a1 * a1 - two * a2 * a2;
        a[1] = a2;
        (2, (num / den).sqrt())
    } else {
        let num = summ2 - two * m[0] * m[0];
        let den = T::one() - two * a1 * a1;
        (1, (num / den).sqrt())
    };
    a[0] = a1;
    for i in first..nn2 {
        a[i] = -m[i] / fac;
    }
    a
}

fn sw_statistic<T: Real>(sample: &[T]) -> Result<T> {
    let n = sample.len();
    if !(SW_MIN_N..=SW_MAX_N).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "Shapiro-Wilk needs {SW_MIN_N} <= n <= {SW_MAX_N}, got {n}"
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("sample contains non-finite values".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let range = x[n - 1] - x[0];
    if !(range > T::zero()) {
        return Err(Error::DegenerateVariance("sample has zero range".into()));
    }
    let mean = x.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let ss: T = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let a = sw_coefficients::<T>(n);
    let num: T = a
        .iter()
        .enumerate()
        .map(|(i, &ai)| ai * (x[n - 1 - i] - x[i]))
        .sum();
    Ok((num * num / ss).min(T::one()))
}

/// Normalizing transform of W: approximately standard normal under the
/// null, large for non-normal samples. Defined for `n >= 4`.
fn sw_normal_score<T: Real>(w: T, n: usize) -> T {
    let an = T::from_usize_lossy(n);
    let y = (T::one() - w).ln();
    if n <= 11 {
        let gamma = poly::<T>(&G, an);
        if y >= gamma {
            return T::infinity();
        }
        let y = -(gamma - y).ln();
        let m = poly::<T>(&C3, an);
        let s = poly::<T>(&C4, an).exp();
        (y - m) / s
    } else {
        let ln_n = an.ln();
        let m = poly::<T>(&C5, ln_n);
        let s = poly::<T>(&C6, ln_n).exp();
        (y - m) / s
    }
}

pub fn shapiro_wilk<T: Real>(sample: &[T]) -> Result<NormalityReport<T>> {
    let w = sw_statistic(sample)?;
    let n = sample.len();
    let p_value = if n == 3 {
        let pi6 = T::lit(6.0 / std::f64::consts::PI);
        (T::one() - pi6 * w.sqrt().acos()).max(T::zero())
    } else {
        let z = sw_normal_score(w, n);
        if z.is_infinite() {
            T::zero()
        } else {
            upper_tail(z)
        }
    };
    Ok(NormalityReport {
        statistic: w,
        p_value: p_value.max(T::zero()).min(T::one()),
        test: NormalityTest::ShapiroWilk,
        dimension: 1,
        n,
    })
}

fn correlation<T: Real>(a: &[T], b: &[T]) -> T {
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let mut sab = T::zero();
    let mut saa = T::zero();
    let mut sbb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        sab = sab + (x - ma) * (y - mb);
        saa = saa + (x - ma) * (x - ma);
        sbb = sbb + (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Royston's H for an `n x d` sample (rows are observations).
///
/// Each marginal W is mapped to a normal score `z_j`, then to
/// `R_j = (Phi^{-1}(Phi(-z_j) / 2))^2`; `H = e * sum R_j / d` is referred to
/// chi-square with `e = d / (1 + (d - 1) c)` degrees of freedom, where `c`
/// averages the transformed inter-column correlations.
pub fn royston_test<T: Real>(sample: &Matrix<T>) -> Result<NormalityReport<T>> {
    let n = sample.rows();
    let d = sample.cols();
    if d < 2 {
        return Err(Error::InvalidArgument("Royston test needs d >= 2".into()));
    }
    if !(4..=SW_MAX_N).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "Royston test needs 4 <= n <= {SW_MAX_N}, got {n}"
        )));
    }
    let cols: Vec<Vec<T>> = (0..d).map(|j| sample.column(j)).collect();
    let normal = std_normal();
    let mut sum_r = 0.0;
    for (j, col) in cols.iter().enumerate() {
        let w = sw_statistic(col).map_err(|e| match e {
            Error::DegenerateVariance(_) => Error::DegenerateVariance(format!("column {j} is constant")),
            other => other,
        })?;
        let z = sw_normal_score(w, n).to_f64_lossy();
        let tail = (normal.cdf(-z) / 2.0).max(1e-300);
        let r = normal.inverse_cdf(tail);
        sum_r += r * r;
    }
    let ln_n = (n as f64).ln();
    let u = 0.715;
    let v = 0.21364 + 0.015124 * ln_n * ln_n - 0.0018034 * ln_n.powi(3);
    let lam = 5;
    let mut total = 0.0;
    for i in 0..d {
        for k in 0..d {
            if i == k {
                continue;
            }
            let r = correlation(&cols[i], &cols[k]).to_f64_lossy();
            if !r.is_finite() || r.abs() >= 1.0 - 1e-10 {
                return Err(Error::DegenerateVariance(format!(
                    "columns {i} and {k} are perfectly correlated"
                )));
            }
            total += r.powi(lam) * (1.0 - u * (1.0 - r).powf(u) / v);
        }
    }
    let mean_c = total / (d * d - d) as f64;
    let edf = d as f64 / (1.0 + (d as f64 - 1.0) * mean_c);
    let h = edf * sum_r / d as f64;
    let chi = ChiSquared::new(edf).map_err(|e| Error::Numeric(e.to_string()))?;
    let p = chi.sf(h);
    Ok(NormalityReport {
        statistic: T::lit(h),
        p_value: T::lit(p.clamp(0.0, 1.0)),
        test: NormalityTest::RoystonH,
        dimension: d,
        n,
    })
}
