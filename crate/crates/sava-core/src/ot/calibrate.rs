//! Gauge-fixing of dual potentials into per-point values.

use crate::error::{Error, Result};
use crate::Float;

/// Recenters a dual vector so the result sums to zero:
/// `out_i = f_i - sum_{j != i} f_j / (n - 1)`.
///
/// Dual potentials are unique only up to an additive constant; differences of
/// calibrated entries are invariant to that constant, which makes the output
/// comparable across solves. Undefined for a single point.
pub fn calibrated_gradient<F: Float>(f: &[F]) -> Result<Vec<F>> {
    let n = f.len();
    if n < 2 {
        return Err(Error::DegenerateSize(n));
    }
    let total: F = f.iter().copied().sum();
    let n_f = F::cast(n as f64);
    let denom = n_f - F::one();
    // out_i = (n * f_i - total) / (n - 1), algebraically identical and one
    // pass cheaper than the subtract-the-rest form.
    Ok(f.iter().map(|&fi| (n_f * fi - total) / denom).collect())
}
