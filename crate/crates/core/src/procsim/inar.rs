use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::series::SeriesSample;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const DEFAULT_BURN_IN: usize = 1000;

/// Intensities above this are treated as an overflow of the count model.
const MAX_INTENSITY: f64 = 1e12;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Poisson INAR(p): `X_t | past ~ Poisson(mu_eps + sum_i alpha_i X_{t-i})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InarSpec {
    pub mu_eps: f64,
    pub alpha: Vec<f64>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl InarSpec {
    pub fn new(mu_eps: f64, alpha: Vec<f64>) -> Self {
        Self {
            mu_eps,
            alpha,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_eps >= 0.0) || !self.mu_eps.is_finite() {
            return Err(Error::Domain(format!("mu_eps must be >= 0, got {}", self.mu_eps)));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::Domain(format!("thinning means must be >= 0, got {a}")));
        }
        let total: f64 = self.alpha.iter().sum();
        if total >= 1.0 {
            return Err(Error::Stationarity(format!(
                "sum of thinning means is {total}, must be < 1"
            )));
        }
        Ok(())
    }

    pub fn stationary_mean(&self) -> f64 {
        self.mu_eps / (1.0 - self.alpha.iter().sum::<f64>())
    }

    /// Conditional intensity given the most recent `p` values, newest first.
    pub fn intensity(&self, recent: &[f64]) -> f64 {
        self.mu_eps
            + self
                .alpha
                .iter()
                .zip(recent)
                .map(|(a, x)| a * x)
                .sum::<f64>()
    }
}

/// One draw from `Poisson(rate)`, with `rate == 0` giving 0.
pub(crate) fn poisson_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    if rate == 0.0 {
        return Ok(0.0);
    }
    if !(rate > 0.0) || rate > MAX_INTENSITY {
        return Err(Error::Domain(format!("Poisson intensity out of range: {rate}")));
    }
    let dist = Poisson::new(rate).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Simulate `n` observations plus a `p`-long lag buffer, after `burn_in`
/// steps from the all-zero state.
pub fn simulate_inar(spec: &InarSpec, n: usize, seed: u64) -> Result<SeriesSample<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let p = spec.order();
    let mut rng = rng_from_seed(seed);
    let total = spec.burn_in + p + n;
    // ring of the last p values, newest at the front
    let mut recent = vec![0.0; p];
    let mut kept = Vec::with_capacity(p + n);
    for step in 0..total {
        let x = poisson_draw(spec.intensity(&recent), &mut rng)?;
        if p > 0 {
            recent.rotate_right(1);
            recent[0] = x;
        }
        if step >= spec.burn_in {
            kept.push(x);
        }
    }
    let values = kept.split_off(p);
    SeriesSample::univariate_counts(values, kept)
}
