use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::series::{SeriesKind, SeriesSample};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from_seed;

/// Piecewise-constant excitation kernel: `a(t) = values[i]` on
/// `(breakpoints[i], breakpoints[i+1]]`, zero elsewhere. `breakpoints[0]`
/// must be 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseKernel {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseKernel {
    pub fn zero() -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![0.0],
        }
    }

    /// `height * 1_{(0, width]}`.
    pub fn boxcar(height: f64, width: f64) -> Self {
        Self {
            breakpoints: vec![0.0, width],
            values: vec![height],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.len() != self.values.len() + 1 || self.values.is_empty() {
            return Err(Error::Domain(
                "kernel needs one more breakpoint than values".into(),
            ));
        }
        if self.breakpoints[0] != 0.0 {
            return Err(Error::Domain("kernel breakpoints must start at 0".into()));
        }
        if self.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("kernel breakpoints must increase".into()));
        }
        if self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("kernel values must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    /// Right end of the last piece with a nonzero value; 0 for the zero
    /// kernel.
    pub fn effective_support(&self) -> f64 {
        self.values
            .iter()
            .rposition(|&v| v != 0.0)
            .map_or(0.0, |i| self.breakpoints[i + 1])
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0) || t > self.support_end() {
            return 0.0;
        }
        // first breakpoint >= t closes the piece containing t
        let idx = self.breakpoints.partition_point(|&b| b < t);
        self.values[idx - 1]
    }
}

/// Univariate Hawkes process with intensity `eta + sum_{s < t} a(t - s)`
/// observed on `(0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HawkesSpec {
    pub eta: f64,
    pub kernel: PiecewiseKernel,
    pub horizon: f64,
}

impl HawkesSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Domain("baseline and horizon must be > 0".into()));
        }
        self.kernel.validate()?;
        let mass = self.kernel.integral();
        if mass >= 1.0 {
            return Err(Error::Stationarity(format!(
                "kernel integral {mass} must be < 1"
            )));
        }
        Ok(())
    }

    pub fn stationary_rate(&self) -> f64 {
        self.eta / (1.0 - self.kernel.integral())
    }
}

fn intensity_at(spec: &HawkesSpec, events: &[f64], window_start: usize, t: f64) -> f64 {
    spec.eta
        + events[window_start..]
            .iter()
            .map(|&s| spec.kernel.eval(t - s))
            .sum::<f64>()
}

/// Ogata thinning. Between accepted events the bound
/// `eta + max(a) * #{events within the kernel window}` dominates the
/// intensity, since the window count can only shrink until the next event.
pub fn simulate_hawkes(spec: &HawkesSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    thin(spec, &mut rng)
}

fn thin<R: Rng>(spec: &HawkesSpec, rng: &mut R) -> Result<Vec<f64>> {
    let reach = spec.kernel.support_end();
    let amax = spec.kernel.max_value();
    let mut events: Vec<f64> = Vec::new();
    let mut start = 0usize;
    let mut t = 0.0;
    loop {
        while start < events.len() && t - events[start] >= reach {
            start += 1;
        }
        let bound = spec.eta + amax * (events.len() - start) as f64;
        let gap: f64 = Exp1.sample(rng);
        t += gap / bound;
        if t > spec.horizon {
            break;
        }
        while start < events.len() && t - events[start] >= reach {
            start += 1;
        }
        let lam = intensity_at(spec, &events, start, t);
        debug_assert!(lam <= bound * (1.0 + 1e-12));
        let u: f64 = rng.random();
        if u * bound <= lam {
            events.push(t);
        }
    }
    Ok(events)
}

/// Counts `X_k = #{events in (k delta, (k+1) delta]}` for
/// `k = 0..ceil(horizon / delta) - 1`.
pub fn bin_counts(events: &[f64], delta: f64, horizon: f64) -> Result<SeriesSample<f64>> {
    if !(delta > 0.0) {
        return Err(Error::Domain("bin width must be > 0".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain("horizon must be > 0".into()));
    }
    let ratio = horizon / delta;
    let nbins = ((ratio - 1e-9 * ratio.max(1.0)).ceil() as usize).max(1);
    let mut bins = vec![0.0; nbins];
    for &e in events {
        if !(e > 0.0) || e > horizon {
            return Err(Error::Domain(format!("event time {e} outside (0, horizon]")));
        }
        let k = ((e / delta).ceil() as usize).saturating_sub(1).min(nbins - 1);
        bins[k] += 1.0;
    }
    SeriesSample::new(
        Matrix::from_row_major(nbins, 1, bins)?,
        Matrix::zeros(0, 1),
        Some(delta),
        SeriesKind::Counts,
    )
}
