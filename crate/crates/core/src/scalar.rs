use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the estimation code.
///
/// Implemented for `f32` and `f64`. Simulation is always carried out in
/// `f64`; everything downstream of a sample (score systems, the LP solver,
/// second-step solves, normality tests) is generic over this trait.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Pivot and feasibility tolerance used by the dense solvers.
    fn solver_eps() -> Self;
}

impl Real for f64 {
    fn solver_eps() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn solver_eps() -> Self {
        1e-5
    }
}
