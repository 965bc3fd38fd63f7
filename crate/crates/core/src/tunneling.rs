//! Double-well tunnelling: Gaussian trial states, their variational fit,
//! and the two routes to a tunnelling time (wavepacket dynamics and level
//! splitting).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ExpectationSeries, WaveFunction};
use crate::error::{Error, Result};
use crate::lattice::SpatialGrid;
use crate::model::{DoubleWellParams, PotentialModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    /// Gaussian width.
    pub alpha: f64,
    /// Displacement of each Gaussian from the origin.
    pub beta: f64,
}

impl TrialParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// `beta = 0` is accepted; it only makes sense for the symmetric state.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trial width must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trial displacement must be non-negative, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }
}

fn trial_amplitudes(grid: &SpatialGrid, p: TrialParams, parity: Parity) -> Vec<f64> {
    let s = parity.sign();
    let w = 2.0 * p.alpha * p.alpha;
    grid.points()
        .map(|x| (-(x - p.beta).powi(2) / w).exp() + s * (-(x + p.beta).powi(2) / w).exp())
        .collect()
}

/// `exp(-(x - beta)^2 / 2 alpha^2) +- exp(-(x + beta)^2 / 2 alpha^2)`,
/// normalized on the grid.
pub fn trial_state(grid: &SpatialGrid, p: TrialParams, parity: Parity) -> Result<WaveFunction> {
    p.validate()?;
    if !grid.contains(p.beta) || !grid.contains(-p.beta) {
        return Err(Error::InvalidParameter(format!(
            "trial displacement {} lies outside the grid",
            p.beta
        )));
    }
    let amps = trial_amplitudes(grid, p, parity)
        .into_iter()
        .map(|a| Complex64::new(a, 0.0))
        .collect();
    WaveFunction::normalized(*grid, amps)
}

/// Symmetric and antisymmetric trial states for the same parameters.
pub fn trial_states(grid: &SpatialGrid, p: TrialParams) -> Result<(WaveFunction, WaveFunction)> {
    Ok((
        trial_state(grid, p, Parity::Symmetric)?,
        trial_state(grid, p, Parity::Antisymmetric)?,
    ))
}

/// `(T_S + T_A) / sqrt 2`, renormalized. Swap the sign of `T_A` for the
/// mirror state.
pub fn localized_state(ts: &WaveFunction, ta: &WaveFunction) -> Result<WaveFunction> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi = ts.combine(h, ta, h)?;
    WaveFunction::normalized(*psi.grid(), psi.amplitudes().to_vec())
}

/// Share of the probability on `x > 0`.
pub fn right_fraction(psi: &WaveFunction) -> f64 {
    let total: f64 = psi.density().iter().sum();
    let right: f64 = psi
        .grid()
        .points()
        .zip(psi.density())
        .filter(|(x, _)| *x > 0.0)
        .map(|(_, d)| d)
        .sum();
    right / total
}

/// Weights `(even, odd)` of the parity decomposition, summing to 1.
/// Requires a grid symmetric about the origin.
pub fn parity_weights(psi: &WaveFunction) -> Result<(f64, f64)> {
    if !psi.grid().is_symmetric() {
        return Err(Error::InvalidGrid("parity needs a grid symmetric about x = 0".into()));
    }
    let a = psi.amplitudes();
    let n = a.len();
    let (mut even, mut odd) = (0.0, 0.0);
    for i in 0..n {
        even += (0.5 * (a[i] + a[n - 1 - i])).norm_sqr();
        odd += (0.5 * (a[i] - a[n - 1 - i])).norm_sqr();
    }
    let total = even + odd;
    if total <= 0.0 || total.is_nan() {
        return Err(Error::Degenerate("parity of a zero state".into()));
    }
    Ok((even / total, odd / total))
}

/// `<f|H|f> / <f|f>` for a real `f` with the hard-wall three-point stencil.
fn stencil_energy(model: &PotentialModel, grid: &SpatialGrid, f: &[f64]) -> f64 {
    let t = 1.0 / (2.0 * model.mass() * grid.dx() * grid.dx());
    let n = f.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, x) in grid.points().enumerate() {
        let left = if i > 0 { f[i - 1] } else { 0.0 };
        let right = if i + 1 < n { f[i + 1] } else { 0.0 };
        let hf = t * (2.0 * f[i] - left - right) + model.potential(x) * f[i];
        num += f[i] * hf;
        den += f[i] * f[i];
    }
    num / den
}

/// Variational energy `<T|H|T>` of a trial state.
pub fn trial_energy(model: &PotentialModel, grid: &SpatialGrid, p: TrialParams, parity: Parity) -> Result<f64> {
    p.validate()?;
    let f = trial_amplitudes(grid, p, parity);
    let e = stencil_energy(model, grid, &f);
    if !e.is_finite() {
        return Err(Error::Degenerate(format!("trial state {p:?} vanishes on the grid")));
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationalOptions {
    pub alpha_range: (f64, f64),
    /// Defaults to `[0.2, 1.5 x_min]` for the double well.
    pub beta_range: Option<(f64, f64)>,
    /// Pins `beta` and fits the width alone.
    pub fixed_beta: Option<f64>,
    pub scan_points: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self {
            alpha_range: (0.3, 3.0),
            beta_range: None,
            fixed_beta: None,
            scan_points: 20,
            tolerance: 1e-6,
            max_sweeps: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitStep {
    pub sweep: usize,
    pub params: TrialParams,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalFit {
    pub parity: Parity,
    pub params: TrialParams,
    pub energy: f64,
    /// False when the sweep cap was hit before the parameters settled;
    /// `params` is then the best point found.
    pub converged: bool,
    pub evaluations: usize,
    pub history: Vec<FitStep>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_section(mut a: f64, mut b: f64, tol: f64, evals: &mut usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    *evals += 2;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        *evals += 1;
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes the trial energy of one parity sector: a coarse grid scan
/// (run in parallel), then coordinate-wise golden-section refinement. `init`
/// joins the scan as an extra candidate.
pub fn variational_fit(
    model: &PotentialModel,
    grid: &SpatialGrid,
    parity: Parity,
    init: TrialParams,
    options: &VariationalOptions,
) -> Result<VariationalFit> {
    init.validate()?;
    let (a_lo, a_hi) = options.alpha_range;
    if !(a_lo > 0.0 && a_hi > a_lo) {
        return Err(Error::InvalidParameter(format!(
            "bad width range {:?}",
            options.alpha_range
        )));
    }
    if options.scan_points < 2 || options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return Err(Error::InvalidParameter(
            "scan needs two points and a positive tolerance".into(),
        ));
    }
    let (b_lo, b_hi) = match (options.fixed_beta, options.beta_range) {
        (Some(b), _) => (b, b),
        (None, Some(r)) => r,
        (None, None) => match model.double_well_params() {
            Some(p) => (0.2, 1.5 * p.x_min),
            None => {
                return Err(Error::InvalidParameter(
                    "displacement range is required outside the double well".into(),
                ))
            }
        },
    };
    if !(b_lo >= 0.0 && b_hi >= b_lo) || !grid.contains(b_hi) || !grid.contains(-b_hi) {
        return Err(Error::InvalidParameter(format!(
            "bad displacement range ({b_lo}, {b_hi})"
        )));
    }
    let beta_free = options.fixed_beta.is_none();
    let energy = |p: TrialParams| -> f64 {
        let f = trial_amplitudes(grid, p, parity);
        let e = stencil_energy(model, grid, &f);
        if e.is_finite() {
            e
        } else {
            f64::INFINITY
        }
    };

    let m = options.scan_points;
    let step = |lo: f64, hi: f64| (hi - lo) / (m - 1) as f64;
    let (da, db) = (step(a_lo, a_hi), step(b_lo, b_hi));
    let mut candidates: Vec<TrialParams> = (0..m)
        .flat_map(|i| {
            (0..if beta_free { m } else { 1 }).map(move |j| TrialParams {
                alpha: a_lo + i as f64 * da,
                beta: b_lo + j as f64 * db,
            })
        })
        .collect();
    if options.fixed_beta.is_none_or(|b| b == init.beta) {
        candidates.push(init);
    }
    let mut evaluations = candidates.len();
    let (mut best, mut best_e) = candidates
        .par_iter()
        .map(|&p| (p, energy(p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("scan is non-empty");
    if !best_e.is_finite() {
        return Err(Error::Degenerate(format!(
            "{parity:?} trial energy is not finite anywhere on the scan"
        )));
    }

    let mut history = vec![FitStep {
        sweep: 0,
        params: best,
        energy: best_e,
    }];
    let mut converged = false;
    for sweep in 1..=options.max_sweeps {
        let prev = best;
        let (lo, hi) = ((best.alpha - da).max(0.5 * best.alpha), best.alpha + da);
        let (alpha, e) = golden_section(lo, hi, options.tolerance, &mut evaluations, |a| {
            energy(TrialParams { alpha: a, ..best })
        });
        if e < best_e {
            best = TrialParams { alpha, ..best };
            best_e = e;
        }
        if beta_free {
            let (lo, hi) = ((best.beta - db).max(0.0), best.beta + db);
            let (beta, e) = golden_section(lo, hi, options.tolerance, &mut evaluations, |b| {
                energy(TrialParams { beta: b, ..best })
            });
            if e < best_e {
                best = TrialParams { beta, ..best };
                best_e = e;
            }
        }
        history.push(FitStep {
            sweep,
            params: best,
            energy: best_e,
        });
        if (best.alpha - prev.alpha).abs() < options.tolerance && (best.beta - prev.beta).abs() < options.tolerance {
            converged = true;
            break;
        }
    }
    Ok(VariationalFit {
        parity,
        params: best,
        energy: best_e,
        converged,
        evaluations,
        history,
    })
}

/// Time of the first extremum of `<x>(t)` whose sign is opposite to the
/// initial value, refined by a parabola through the extremal sample and its
/// neighbours. Assumes uniform sampling.
pub fn tunnel_time_dynamic(series: &ExpectationSeries) -> Result<f64> {
    let v = &series.values;
    let t = &series.times;
    if v.len() != t.len() || v.len() < 3 {
        return Err(Error::NoTunnelEvent("series has fewer than three samples".into()));
    }
    let s0 = v[0].signum();
    if v[0] == 0.0 {
        return Err(Error::NoTunnelEvent("series starts at <x> = 0".into()));
    }
    for i in 1..v.len() - 1 {
        let (a, b, c) = (s0 * v[i - 1], s0 * v[i], s0 * v[i + 1]);
        if b < 0.0 && b <= a && b <= c {
            let denom = a - 2.0 * b + c;
            let offset = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            let dt = t[i + 1] - t[i];
            return Ok(t[i] + offset * dt);
        }
    }
    Err(Error::NoTunnelEvent(format!(
        "no sign-reversed extremum of {} within t <= {}",
        series.observable,
        t[t.len() - 1]
    )))
}

/// `pi / (E_A - E_S)`.
pub fn tunnel_time_splitting(e_s: f64, e_a: f64) -> Result<f64> {
    let gap = e_a - e_s;
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "splitting must be positive, got {gap}"
        )));
    }
    Ok(PI / gap)
}

/// Lowest `count` eigenvalues of the hard-wall stencil Hamiltonian on the
/// grid, by Sturm-sequence bisection.
pub fn stencil_levels(model: &PotentialModel, grid: &SpatialGrid, count: usize) -> Result<Vec<f64>> {
    let n = grid.len();
    if count > n {
        return Err(Error::InvalidParameter(format!(
            "asked for {count} levels of a {n}-point stencil"
        )));
    }
    let t = 1.0 / (2.0 * model.mass() * grid.dx() * grid.dx());
    let diag: Vec<f64> = grid.points().map(|x| 2.0 * t + model.potential(x)).collect();
    let lo0 = diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * t;
    let hi0 = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * t;
    // Number of eigenvalues below `lambda`.
    let below = |lambda: f64| -> usize {
        let mut q = 1.0;
        let mut neg = 0;
        for (i, d) in diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - t * t / q };
            if q == 0.0 {
                q = -f64::EPSILON * t;
            }
            if q < 0.0 {
                neg += 1;
            }
        }
        neg
    };
    Ok((0..count)
        .map(|k| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect())
}

/// Finds `(alpha, x_min)` whose two lowest stencil levels on `grid` are
/// `(e0, e1)`.
///
/// Outer bisection on `x_min` matches the splitting, inner bisection on
/// `alpha` matches the doublet centre. Both are monotone: a deeper potential
/// raises every level and a wider barrier shrinks the splitting.
pub fn calibrate_double_well(grid: &SpatialGrid, e0: f64, e1: f64) -> Result<DoubleWellParams> {
    if !(e0.is_finite() && e1 > e0) {
        return Err(Error::InvalidParameter(format!("need e0 < e1, got {e0}, {e1}")));
    }
    let centre = 0.5 * (e0 + e1);
    let gap = e1 - e0;
    let levels = |alpha: f64, x_min: f64| -> Result<(f64, f64)> {
        let model = PotentialModel::double_well(DoubleWellParams::new(alpha, x_min)?)?;
        let l = stencil_levels(&model, grid, 2)?;
        Ok((l[0], l[1]))
    };
    // Bisection in log(alpha) for the doublet centre at fixed x_min.
    let alpha_for = |x_min: f64| -> Result<f64> {
        let (mut lo, mut hi) = (1e-8f64.ln(), 1e2f64.ln());
        let mean = |la: f64| levels(la.exp(), x_min).map(|(a, b)| 0.5 * (a + b));
        if mean(lo)? > centre || mean(hi)? < centre {
            return Err(Error::Degenerate(format!(
                "doublet centre {centre} not reachable at x_min = {x_min}"
            )));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mean(mid)? < centre {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    };
    let splitting = |x_min: f64| -> Result<f64> {
        let (a, b) = levels(alpha_for(x_min)?, x_min)?;
        Ok(b - a)
    };
    let (mut lo, mut hi) = (0.5, 0.6 * grid.x_max().min(-grid.x_min()));
    if splitting(lo)? < gap || splitting(hi)? > gap {
        return Err(Error::Degenerate(format!(
            "splitting {gap} not bracketed by x_min in [{lo}, {hi}]"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if splitting(mid)? > gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_min = 0.5 * (lo + hi);
    DoubleWellParams::new(alpha_for(x_min)?, x_min)
}

/// Summary of a tunnelling experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunnelReport {
    pub tau_dynamic: f64,
    pub tau_split_variational: f64,
    pub tau_split_spectrum: f64,
    #[serde(rename = "E_S_var")]
    pub e_s_var: f64,
    #[serde(rename = "E_A_var")]
    pub e_a_var: f64,
    #[serde(rename = "E_S_peak")]
    pub e_s_peak: f64,
    #[serde(rename = "E_A_peak")]
    pub e_a_peak: f64,
}
