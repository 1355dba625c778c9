use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, norm_l2};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord<T> {
    pub linf: T,
    pub l2: T,
    pub exact_support: bool,
}

/// Error norms of `theta_est - theta_true` and whether the supports agree
/// as sets.
pub fn selection_and_errors<T: Real>(
    theta_est: &[T],
    theta_true: &[T],
    support_est: &[usize],
    support_true: &[usize],
) -> Result<MetricRecord<T>> {
    if theta_est.len() != theta_true.len() {
        return Err(Error::Dimension {
            expected: theta_true.len(),
            got: theta_est.len(),
        });
    }
    let diff: Vec<T> = theta_est.iter().zip(theta_true).map(|(&a, &b)| a - b).collect();
    let mut a = support_est.to_vec();
    let mut b = support_true.to_vec();
    a.sort_unstable();
    a.dedup();
    b.sort_unstable();
    b.dedup();
    Ok(MetricRecord {
        linf: norm_inf(&diff),
        l2: norm_l2(&diff),
        exact_support: a == b,
    })
}
