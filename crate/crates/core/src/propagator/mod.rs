//! Short-time kernel, finite-time propagators and the normalization diagnostic.
//!
//! The one-slice kernel uses the midpoint rule,
//!
//! ```text
//! K_ij(dt) = C exp{ i dt L((x_i + x_j) / 2, (x_j - x_i) / dt) },   C = sqrt(m / (2 pi i dt))
//! ```
//!
//! with the principal branch `sqrt(1/i) = exp(-i pi/4)`. A block of `N`
//! slices is `G(T) = dx^(N-1) K^N`, evaluated by repeated squaring of `dx K`
//! (log2 N products) followed by a single division by `dx`, which keeps the
//! intermediate magnitudes of order one.
//!
//! Boundaries are plain truncation of the matrix at `x_0` and `x_D`.

mod analytic;
mod dump;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::SpatialGrid;
use crate::linalg::ComplexMatrix;
use crate::model::PotentialModel;

pub use analytic::harmonic_exact_kernel;
pub use dump::{read_propagator, write_propagator};

/// One-slice kernel matrix.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    entries: ComplexMatrix,
    dt: f64,
    grid: SpatialGrid,
    c_norm: Complex64,
}

impl KernelMatrix {
    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    /// Signed slice duration; negative for a backward kernel.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Prefactor `C`.
    pub fn c_norm(&self) -> Complex64 {
        self.c_norm
    }
}

/// Finite-time propagator `G_ij(t) ~ <x_i|U(t)|x_j>`.
#[derive(Clone, Debug)]
pub struct PropagatorMatrix {
    entries: ComplexMatrix,
    elapsed: f64,
    grid: SpatialGrid,
}

impl PropagatorMatrix {
    pub fn from_parts(grid: SpatialGrid, elapsed: f64, entries: ComplexMatrix) -> Result<Self> {
        if entries.dim() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { entries, elapsed, grid })
    }

    /// `identity / dx`, the neutral element of the dx-weighted product.
    pub fn identity(grid: SpatialGrid) -> Self {
        let mut entries = ComplexMatrix::identity(grid.len());
        entries.scale_in_place(Complex64::new(1.0 / grid.dx(), 0.0));
        Self {
            entries,
            elapsed: 0.0,
            grid,
        }
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// `dx * sum_k G_kk`, the lattice version of `Tr U(t)`.
    pub fn trace(&self) -> Complex64 {
        self.entries.trace() * self.grid.dx()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.is_finite()
    }

    pub fn into_entries(self) -> ComplexMatrix {
        self.entries
    }
}

/// Normalization `sum_{i,j} dx^2 conj(G_ij) G_ik` for every start point `x_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormProfile {
    /// Real parts of the per-column sums.
    pub values: Vec<f64>,
    pub elapsed: f64,
}

impl NormProfile {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn kernel_prefactor(mass: f64, dt: f64) -> Complex64 {
    // sqrt(m / (2 pi i dt)): the phase is exp(-i pi/4) forward, exp(+i pi/4) backward.
    let modulus = (mass / (2.0 * std::f64::consts::PI * dt.abs())).sqrt();
    Complex64::from_polar(modulus, -dt.signum() * std::f64::consts::FRAC_PI_4)
}

fn kernel_with_signed_dt(model: &PotentialModel, grid: &SpatialGrid, dt: f64) -> KernelMatrix {
    let c_norm = kernel_prefactor(model.mass(), dt);
    let pts: Vec<f64> = grid.points().collect();
    let n = pts.len();
    let mut entries = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mid = (pts[i] + pts[j]) * 0.5;
            let v = (pts[j] - pts[i]) / dt;
            let z = c_norm * Complex64::cis(dt * model.lagrangian(mid, v));
            entries[(i, j)] = z;
            entries[(j, i)] = z;
        }
    }
    KernelMatrix {
        entries,
        dt,
        grid: *grid,
        c_norm,
    }
}

/// Builds the forward one-slice kernel `K(dt)`.
pub fn build_kernel(model: &PotentialModel, grid: &SpatialGrid, dt: f64) -> Result<KernelMatrix> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slice duration must be positive, got {dt}"
        )));
    }
    Ok(kernel_with_signed_dt(model, grid, dt))
}

/// Builds the time-reversed kernel `K(-dt)`, the conjugate transpose of `K(dt)`.
pub fn build_backward_kernel(model: &PotentialModel, grid: &SpatialGrid, dt: f64) -> Result<KernelMatrix> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slice duration must be positive, got {dt}"
        )));
    }
    Ok(kernel_with_signed_dt(model, grid, -dt))
}

/// `G = dx^(N-1) K^N` for `N` a power of two.
pub fn compose_propagator(kernel: &KernelMatrix, slices: usize) -> Result<PropagatorMatrix> {
    if !slices.is_power_of_two() {
        return Err(Error::InvalidSlicing(format!(
            "slices per block must be a power of two, got {slices}"
        )));
    }
    let grid = kernel.grid;
    let elapsed = kernel.dt * slices as f64;
    if slices == 1 {
        return PropagatorMatrix::from_parts(grid, elapsed, kernel.entries.clone());
    }
    let dx = grid.dx();
    let mut acc = kernel.entries.scaled(Complex64::new(dx, 0.0));
    let mut scratch = ComplexMatrix::zeros(acc.dim());
    let mut remaining = slices;
    while remaining > 1 {
        acc.mul_scaled_into(&acc, 1.0, &mut scratch);
        std::mem::swap(&mut acc, &mut scratch);
        remaining /= 2;
    }
    acc.scale_in_place(Complex64::new(1.0 / dx, 0.0));
    PropagatorMatrix::from_parts(grid, elapsed, acc)
}

/// Composition law `G(t_block + t_prev) = G(t_block) G(t_prev) dx`.
pub fn extend_propagator(block: &PropagatorMatrix, prev: &PropagatorMatrix) -> Result<PropagatorMatrix> {
    let mut out = ComplexMatrix::zeros(block.grid.len());
    extend_into(block, prev, &mut out)?;
    PropagatorMatrix::from_parts(block.grid, block.elapsed + prev.elapsed, out)
}

pub(crate) fn extend_into(block: &PropagatorMatrix, prev: &PropagatorMatrix, out: &mut ComplexMatrix) -> Result<()> {
    if block.grid != prev.grid {
        return Err(Error::GridMismatch);
    }
    block.entries.mul_scaled_into(&prev.entries, block.grid.dx(), out);
    Ok(())
}

/// Per-start-point normalization. A propagator that is unitary on the
/// lattice (`dx G` a unitary matrix) gives exactly 1 everywhere.
pub fn norm_profile(g: &PropagatorMatrix) -> NormProfile {
    let dx2 = g.grid.dx() * g.grid.dx();
    let n = g.grid.len();
    let row_sums = g.entries.row_sums();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for (i, s) in row_sums.iter().enumerate() {
        let s = s.conj();
        for (a, z) in acc.iter_mut().zip(g.entries.row(i)) {
            *a += s * z;
        }
    }
    NormProfile {
        values: acc.into_iter().map(|z| z.re * dx2).collect(),
        elapsed: g.elapsed,
    }
}

/// Mean of [`norm_profile`] without forming the profile:
/// `dx^2 |G 1|^2 / (D + 1)`.
fn mean_norm(g: &PropagatorMatrix) -> f64 {
    let dx2 = g.grid.dx() * g.grid.dx();
    let sq: f64 = g.entries.row_sums().iter().map(|s| s.norm_sqr()).sum();
    dx2 * sq / g.grid.len() as f64
}

/// Rescales `G` by the single real factor `1 / sqrt(mean norm)`.
pub fn renormalize(g: &PropagatorMatrix) -> Result<PropagatorMatrix> {
    let mut out = g.clone();
    renormalize_in_place(&mut out)?;
    Ok(out)
}

pub(crate) fn renormalize_in_place(g: &mut PropagatorMatrix) -> Result<f64> {
    let mean = mean_norm(g);
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::Degenerate(format!("cannot renormalize, mean norm is {mean}")));
    }
    let factor = 1.0 / mean.sqrt();
    g.entries.scale_in_place(Complex64::new(factor, 0.0));
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DoubleWellParams;
    use std::f64::consts::PI;

    fn small_grid() -> SpatialGrid {
        SpatialGrid::new(-5.0, 5.0, 120).unwrap()
    }

    #[test]
    fn free_particle_diagonal_is_prefactor() {
        let free = PotentialModel::custom(vec![0.0], 1.0).unwrap();
        let k = build_kernel(&free, &small_grid(), 0.05).unwrap();
        for i in 0..k.grid().len() {
            assert_eq!(k.entries()[(i, i)], k.c_norm());
        }
        let expected = Complex64::from_polar((1.0 / (2.0 * PI * 0.05)).sqrt(), -PI / 4.0);
        assert!((k.c_norm() - expected).norm() < 1e-14);
    }

    #[test]
    fn harmonic_entry_phase() {
        // x_0 = 0, x_1 = 0.5: phase = dt L(0.25, 5).
        let grid = SpatialGrid::new(0.0, 1.0, 2).unwrap();
        let k = build_kernel(&PotentialModel::harmonic(), &grid, 0.1).unwrap();
        let expected = k.c_norm() * Complex64::cis(1.246875);
        assert!((k.entries()[(0, 1)] - expected).norm() < 1e-13);
    }

    #[test]
    fn kernel_modulus_and_symmetry() {
        let dw = PotentialModel::double_well(DoubleWellParams::new(0.05, 2.0).unwrap()).unwrap();
        for model in [PotentialModel::harmonic(), dw] {
            let k = build_kernel(&model, &small_grid(), 0.07).unwrap();
            let c = (1.0 / (2.0 * PI * 0.07)).sqrt();
            let n = k.grid().len();
            for i in 0..n {
                for j in 0..n {
                    assert!((k.entries()[(i, j)].norm() - c).abs() < 1e-12);
                    assert_eq!(k.entries()[(i, j)], k.entries()[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn rejects_non_positive_dt() {
        let m = PotentialModel::harmonic();
        assert!(build_kernel(&m, &small_grid(), 0.0).is_err());
        assert!(build_kernel(&m, &small_grid(), -0.1).is_err());
        assert!(build_backward_kernel(&m, &small_grid(), -0.1).is_err());
    }

    #[test]
    fn backward_kernel_is_conjugate_transpose() {
        let m = PotentialModel::double_well(DoubleWellParams::new(0.1, 1.5).unwrap()).unwrap();
        let fwd = build_kernel(&m, &small_grid(), 0.09).unwrap();
        let bwd = build_backward_kernel(&m, &small_grid(), 0.09).unwrap();
        assert!(bwd.entries().max_abs_diff(&fwd.entries().conj_transpose()) < 1e-14);
        assert_eq!(bwd.dt(), -0.09);
    }

    #[test]
    fn compose_small_powers() {
        let k = build_kernel(&PotentialModel::harmonic(), &small_grid(), 0.1).unwrap();
        let g1 = compose_propagator(&k, 1).unwrap();
        assert_eq!(g1.entries(), k.entries());
        assert_eq!(g1.elapsed(), 0.1);

        let g2 = compose_propagator(&k, 2).unwrap();
        let dx = small_grid().dx();
        let direct = k.entries().mul_scaled(k.entries(), dx);
        let scale = direct.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(g2.entries().max_abs_diff(&direct) < 1e-12 * scale);
        assert!((g2.elapsed() - 0.2).abs() < 1e-15);

        assert!(matches!(compose_propagator(&k, 6), Err(Error::InvalidSlicing(_))));
    }

    #[test]
    fn extend_by_identity_is_neutral() {
        let k = build_kernel(&PotentialModel::harmonic(), &small_grid(), 0.1).unwrap();
        let g = compose_propagator(&k, 4).unwrap();
        let id = PropagatorMatrix::identity(small_grid());
        let e = extend_propagator(&id, &g).unwrap();
        let scale = g.entries().as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(e.entries().max_abs_diff(g.entries()) < 1e-13 * scale);
        assert_eq!(e.elapsed(), g.elapsed());
    }

    #[test]
    fn extend_rejects_foreign_grid() {
        let m = PotentialModel::harmonic();
        let a = compose_propagator(&build_kernel(&m, &small_grid(), 0.1).unwrap(), 1).unwrap();
        let other = SpatialGrid::new(-5.0, 5.0, 121).unwrap();
        let b = compose_propagator(&build_kernel(&m, &other, 0.1).unwrap(), 1).unwrap();
        assert!(matches!(extend_propagator(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn ladder_bookkeeping() {
        let k = build_kernel(&PotentialModel::harmonic(), &small_grid(), 0.05).unwrap();
        let block = compose_propagator(&k, 2).unwrap();
        let mut g = block.clone();
        for _ in 0..5 {
            g = extend_propagator(&block, &g).unwrap();
        }
        assert!((g.elapsed() - 6.0 * block.elapsed()).abs() < 1e-14);
    }

    #[test]
    fn norm_profile_is_one_for_lattice_unitary() {
        // dx G = normalized DFT matrix, which is unitary.
        let grid = SpatialGrid::new(-2.0, 2.0, 30).unwrap();
        let n = grid.len();
        let dx = grid.dx();
        let entries = ComplexMatrix::from_fn(n, |i, j| {
            Complex64::cis(2.0 * PI * (i * j) as f64 / n as f64) / ((n as f64).sqrt() * dx)
        });
        let g = PropagatorMatrix::from_parts(grid, 1.0, entries).unwrap();
        let profile = norm_profile(&g);
        for v in &profile.values {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
        assert!((profile.mean() - mean_norm(&g)).abs() < 1e-12);
        assert_eq!(norm_profile(&PropagatorMatrix::identity(grid)).values, vec![1.0; n]);
    }

    #[test]
    fn renormalize_scalar_examples() {
        let grid = SpatialGrid::new(-1.0, 1.0, 8).unwrap();
        let id = PropagatorMatrix::identity(grid);
        let same = renormalize(&id).unwrap();
        assert!(same.entries().max_abs_diff(id.entries()) < 1e-14);

        let quadrupled =
            PropagatorMatrix::from_parts(grid, 0.0, id.entries().scaled(Complex64::new(2.0, 0.0))).unwrap();
        assert!((norm_profile(&quadrupled).mean() - 4.0).abs() < 1e-12);
        let halved = renormalize(&quadrupled).unwrap();
        assert!(halved.entries().max_abs_diff(id.entries()) < 1e-13);

        let zero = PropagatorMatrix::from_parts(grid, 0.0, ComplexMatrix::zeros(grid.len())).unwrap();
        assert!(matches!(renormalize(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn renormalize_keeps_phases() {
        let k = build_kernel(&PotentialModel::harmonic(), &small_grid(), 0.1).unwrap();
        let g = compose_propagator(&k, 2).unwrap();
        let r = renormalize(&g).unwrap();
        let ratio = r.entries()[(3, 17)] / g.entries()[(3, 17)];
        assert!(ratio.im.abs() < 1e-12 && ratio.re > 0.0);
        assert!((norm_profile(&r).mean() - 1.0).abs() < 1e-10);
    }
}
