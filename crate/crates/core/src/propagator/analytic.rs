use num_complex::Complex64;

use super::PropagatorMatrix;
use crate::error::{Error, Result};
use crate::lattice::SpatialGrid;
use crate::linalg::ComplexMatrix;

/// Closed-form propagator of the scaled harmonic oscillator (m = omega = 1)
/// sampled on the grid:
///
/// ```text
/// K(x, y; t) = (2 pi i sin t)^(-1/2) exp{ i ((x^2 + y^2) cos t - 2 x y) / (2 sin t) }
/// ```
///
/// The prefactor carries the Maslov phase `(-i)^floor(t / pi)` so the result
/// is continuous across the caustics at multiples of pi.
pub fn harmonic_exact_kernel(grid: &SpatialGrid, t: f64) -> Result<PropagatorMatrix> {
    let (s, c) = t.sin_cos();
    if !t.is_finite() || s.abs() < 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "harmonic kernel is singular at t = {t} (multiple of pi)"
        )));
    }
    let crossings = (t / std::f64::consts::PI).floor() as i64;
    let maslov = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * crossings.rem_euclid(4) as f64);
    let prefactor = Complex64::from_polar(
        (1.0 / (2.0 * std::f64::consts::PI * s.abs())).sqrt(),
        -std::f64::consts::FRAC_PI_4,
    ) * maslov;
    let pts: Vec<f64> = grid.points().collect();
    let entries = ComplexMatrix::from_fn(pts.len(), |i, j| {
        let (x, y) = (pts[i], pts[j]);
        prefactor * Complex64::cis(((x * x + y * y) * c - 2.0 * x * y) / (2.0 * s))
    });
    PropagatorMatrix::from_parts(*grid, t, entries)
}
