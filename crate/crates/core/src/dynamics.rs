//! Wavefunctions on the lattice, their propagation and observable
//! expectation values.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::SpatialGrid;
use crate::linalg::ComplexMatrix;
use crate::model::PotentialModel;
use crate::propagator::PropagatorMatrix;

/// Propagation aborts once the discrete norm falls below this value.
pub const DEFAULT_MIN_NORM: f64 = 0.5;

/// Hermiticity tolerance for observable matrices, relative to the largest entry.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    amplitudes: Vec<Complex64>,
    grid: SpatialGrid,
}

impl WaveFunction {
    /// Wraps amplitudes and rescales them to unit discrete norm.
    pub fn normalized(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let psi = Self { amplitudes, grid };
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Degenerate(format!("cannot normalize a state of norm {norm}")));
        }
        Ok(psi.scaled(Complex64::new(1.0 / norm.sqrt(), 0.0)))
    }

    /// Wraps amplitudes as they are.
    pub fn unnormalized(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { amplitudes, grid })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Discrete norm `dx * sum |psi_i|^2`.
    pub fn norm(&self) -> f64 {
        self.grid.dx() * self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `dx * <self|other>`.
    pub fn overlap(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dx())
    }

    pub fn scaled(&self, factor: Complex64) -> WaveFunction {
        WaveFunction {
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
            grid: self.grid,
        }
    }

    /// `a * self + b * other`, not renormalized.
    pub fn combine(&self, a: Complex64, other: &WaveFunction, b: Complex64) -> Result<WaveFunction> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(WaveFunction {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            grid: self.grid,
        })
    }
}

/// Real Gaussian `(alpha/pi)^(1/4) exp(-alpha (x - x_start)^2 / 2)`,
/// renormalized on the grid.
pub fn gaussian_state(grid: &SpatialGrid, alpha: f64, x_start: f64) -> Result<WaveFunction> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gaussian width parameter must be positive, got {alpha}"
        )));
    }
    if !grid.contains(x_start) {
        return Err(Error::InvalidParameter(format!(
            "start position {x_start} lies outside [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let amp = (alpha / std::f64::consts::PI).powf(0.25);
    let amplitudes = grid
        .points()
        .map(|x| Complex64::new(amp * (-0.5 * alpha * (x - x_start).powi(2)).exp(), 0.0))
        .collect();
    WaveFunction::normalized(*grid, amplitudes)
}

/// `psi'_i = dx * sum_j G_ij psi_j`. The result is not renormalized.
pub fn apply_propagator(g: &PropagatorMatrix, psi: &WaveFunction) -> Result<WaveFunction> {
    if g.grid() != psi.grid() {
        return Err(Error::GridMismatch);
    }
    let dx = g.grid().dx();
    let mut amplitudes = g.entries().mul_vec(&psi.amplitudes);
    amplitudes.iter_mut().for_each(|z| *z *= dx);
    Ok(WaveFunction {
        amplitudes,
        grid: psi.grid,
    })
}

/// Matrix `<x_j|O|x_k>` of a Hermitian observable.
#[derive(Clone, Debug)]
pub struct ObservableMatrix {
    entries: ComplexMatrix,
    label: String,
}

impl ObservableMatrix {
    pub fn new(label: impl Into<String>, entries: ComplexMatrix) -> Result<Self> {
        let label = label.into();
        let scale = entries.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
        if entries.hermitian_defect() > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(label));
        }
        Ok(Self { entries, label })
    }

    fn diagonal(label: &str, values: impl Iterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.collect();
        let mut entries = ComplexMatrix::zeros(values.len());
        for (i, v) in values.into_iter().enumerate() {
            entries[(i, i)] = Complex64::new(v, 0.0);
        }
        Self {
            entries,
            label: label.into(),
        }
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }
}

pub fn position_observable(grid: &SpatialGrid) -> ObservableMatrix {
    ObservableMatrix::diagonal("x", grid.points())
}

pub fn potential_observable(model: &PotentialModel, grid: &SpatialGrid) -> ObservableMatrix {
    ObservableMatrix::diagonal("V", grid.points().map(|x| model.potential(x)))
}

/// Three-point kinetic energy stencil with hard walls.
pub fn kinetic_observable_with_mass(grid: &SpatialGrid, mass: f64) -> ObservableMatrix {
    // -(1/2m) (psi_{i+1} - 2 psi_i + psi_{i-1}) / dx^2, psi = 0 outside the grid.
    let n = grid.len();
    let t = 1.0 / (2.0 * mass * grid.dx() * grid.dx());
    let mut entries = ComplexMatrix::zeros(n);
    for i in 0..n {
        entries[(i, i)] = Complex64::new(2.0 * t, 0.0);
        if i + 1 < n {
            entries[(i, i + 1)] = Complex64::new(-t, 0.0);
            entries[(i + 1, i)] = Complex64::new(-t, 0.0);
        }
    }
    ObservableMatrix {
        entries,
        label: "T".into(),
    }
}

/// Three-point kinetic energy stencil with hard walls, unit mass.
pub fn kinetic_observable(grid: &SpatialGrid) -> ObservableMatrix {
    kinetic_observable_with_mass(grid, 1.0)
}

pub fn hamiltonian_observable(model: &PotentialModel, grid: &SpatialGrid) -> ObservableMatrix {
    let mut h = kinetic_observable_with_mass(grid, model.mass());
    for (i, x) in grid.points().enumerate() {
        h.entries[(i, i)] += Complex64::new(model.potential(x), 0.0);
    }
    h.label = "H".into();
    h
}

/// Full complex `<psi|O|psi> / <psi|psi>`; the imaginary part only measures
/// roundoff for Hermitian `O`.
pub fn expectation_complex(psi: &WaveFunction, o: &ObservableMatrix) -> Result<Complex64> {
    if o.dim() != psi.amplitudes.len() {
        return Err(Error::GridMismatch);
    }
    let o_psi = o.entries.mul_vec(&psi.amplitudes);
    let num: Complex64 = psi.amplitudes.iter().zip(&o_psi).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = psi.amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if !(den.is_finite() && den > 0.0) {
        return Err(Error::Degenerate("expectation value of a zero state".into()));
    }
    Ok(num / den)
}

/// Norm-insensitive expectation value `<psi|O|psi> / <psi|psi>`.
pub fn expectation(psi: &WaveFunction, o: &ObservableMatrix) -> Result<f64> {
    Ok(expectation_complex(psi, o)?.re)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationSeries {
    pub observable: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensitySnapshot {
    pub time: f64,
    pub density: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub series: Vec<ExpectationSeries>,
    pub snapshots: Vec<DensitySnapshot>,
    pub final_state: WaveFunction,
}

impl Evolution {
    pub fn series(&self, label: &str) -> Option<&ExpectationSeries> {
        self.series.iter().find(|s| s.observable == label)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Record `|psi|^2` every `stride` steps; `None` disables snapshots.
    pub snapshot_stride: Option<usize>,
    pub min_norm: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            snapshot_stride: None,
            min_norm: DEFAULT_MIN_NORM,
        }
    }
}

/// Applies `G` `steps` times, measuring every observable before the first
/// and after each application (so `steps + 1` samples at `t_k = k T`).
pub fn evolve_and_record(
    g: &PropagatorMatrix,
    psi0: &WaveFunction,
    steps: usize,
    observables: &[ObservableMatrix],
    options: EvolveOptions,
) -> Result<Evolution> {
    if g.grid() != psi0.grid() {
        return Err(Error::GridMismatch);
    }
    if options.snapshot_stride == Some(0) {
        return Err(Error::InvalidParameter("snapshot stride must be at least 1".into()));
    }
    let mut series: Vec<ExpectationSeries> = observables
        .iter()
        .map(|o| ExpectationSeries {
            observable: o.label.clone(),
            times: Vec::with_capacity(steps + 1),
            values: Vec::with_capacity(steps + 1),
        })
        .collect();
    let mut times = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut psi = psi0.clone();
    for step in 0..=steps {
        if step > 0 {
            psi = apply_propagator(g, &psi)?;
        }
        let t = step as f64 * g.elapsed();
        let norm = psi.norm();
        if !(norm.is_finite() && norm >= options.min_norm) {
            return Err(Error::NormDecay { step, time: t, norm });
        }
        times.push(t);
        norms.push(norm);
        for (s, o) in series.iter_mut().zip(observables) {
            s.times.push(t);
            s.values.push(expectation(&psi, o)?);
        }
        if let Some(stride) = options.snapshot_stride {
            if step % stride == 0 {
                snapshots.push(DensitySnapshot {
                    time: t,
                    density: psi.density(),
                });
            }
        }
    }
    Ok(Evolution {
        times,
        norms,
        series,
        snapshots,
        final_state: psi,
    })
}
