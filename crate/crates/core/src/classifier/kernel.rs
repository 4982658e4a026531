use crate::error::{Error, Result};

#[inline]
pub fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(−γ‖u − v‖²)`.
pub fn rbf_kernel(u: &[f64], v: &[f64], gamma: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::mismatch(u.len(), v.len()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    Ok((-gamma * squared_distance(u, v)).exp())
}
