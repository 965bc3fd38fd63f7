//! Energy levels from the propagator trace.
//!
//! The trace is sampled on the ladder `t_i = (i + 1) T`, `i = 0..N_T`, by
//! repeatedly applying the composition law with the block propagator `G(T)`.
//! Since `Tr U(t) = sum_n exp(-i E_n t)`, a discrete Fourier transform with a
//! positive exponent puts level `E_n` at the bin nearest `E_n / dE`, with
//! `dE = 2 pi / ((N_T + 1) T)` and range `[0, 2 pi / T)`. No window is
//! applied; energies above the range alias back into it modulo `2 pi / T`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::propagator::{extend_into, renormalize_in_place, PropagatorMatrix};

pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSeries {
    /// `Tr G(t_i)` for `t_i = (i + 1) T`.
    pub values: Vec<Complex64>,
    pub block_time: f64,
}

impl TraceSeries {
    pub fn time(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.block_time
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySpectrum {
    pub energies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Bin width `2 pi / ((N_T + 1) T)`.
    pub resolution: f64,
    /// Upper end of the energy window, `2 pi / T`.
    pub range: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub energy: f64,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeakList {
    pub peaks: Vec<Peak>,
}

impl PeakList {
    pub fn energies(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.energy).collect()
    }

    /// Peak closest in energy to `target`.
    pub fn nearest(&self, target: f64) -> Option<Peak> {
        self.peaks
            .iter()
            .copied()
            .min_by(|a, b| (a.energy - target).abs().total_cmp(&(b.energy - target).abs()))
    }
}

/// Samples `Tr G(t_i)` for `i = 0..=n_blocks` via `G(t_i) = G(T) G(t_{i-1}) dx`.
///
/// With `renormalize_each`, every extended propagator is rescaled by the
/// global normalization factor before the next step.
pub fn trace_ladder(block: &PropagatorMatrix, n_blocks: usize, renormalize_each: bool) -> Result<TraceSeries> {
    if n_blocks < 1 {
        return Err(Error::InvalidSlicing("trace ladder needs at least one block".into()));
    }
    if !block.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let mut values = Vec::with_capacity(n_blocks + 1);
    values.push(block.trace());
    let mut current = block.clone();
    let mut scratch = ComplexMatrix::zeros(block.grid().len());
    for step in 1..=n_blocks {
        extend_into(block, &current, &mut scratch)?;
        let elapsed = current.elapsed() + block.elapsed();
        let entries = std::mem::replace(&mut scratch, current.into_entries());
        current = PropagatorMatrix::from_parts(*block.grid(), elapsed, entries)?;
        if !current.is_finite() {
            return Err(Error::NonFinite { step });
        }
        if renormalize_each {
            renormalize_in_place(&mut current).map_err(|_| Error::NonFinite { step })?;
        }
        values.push(current.trace());
    }
    Ok(TraceSeries {
        values,
        block_time: block.elapsed(),
    })
}

/// Unwindowed DFT `X_k = sum_n tr_n exp(+2 pi i k n / M)`, `M = N_T + 1`.
///
/// A sample sequence `exp(-i E t_n)` peaks at bin energy `+E`, and
/// `sum |X_k|^2 = M sum |tr_n|^2`.
pub fn spectrum_from_trace(trace: &TraceSeries) -> Result<EnergySpectrum> {
    let m = trace.values.len();
    if m < 2 {
        return Err(Error::InvalidParameter(
            "spectrum needs at least two trace samples".into(),
        ));
    }
    if !(trace.block_time.is_finite() && trace.block_time > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "block time must be positive, got {}",
            trace.block_time
        )));
    }
    let mut buf = trace.values.clone();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let resolution = 2.0 * std::f64::consts::PI / (m as f64 * trace.block_time);
    Ok(EnergySpectrum {
        energies: (0..m).map(|k| k as f64 * resolution).collect(),
        magnitudes: buf.iter().map(|z| z.norm()).collect(),
        resolution,
        range: 2.0 * std::f64::consts::PI / trace.block_time,
    })
}

/// Local maxima above `threshold_fraction * max`, refined by a parabola
/// through the log-magnitudes of the peak bin and its two neighbours.
///
/// Bins are treated as periodic, matching the DFT.
pub fn find_peaks(spectrum: &EnergySpectrum, threshold_fraction: f64) -> Result<PeakList> {
    let m = spectrum.magnitudes.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    if m < 3 {
        return Ok(PeakList::default());
    }
    let mags = &spectrum.magnitudes;
    let max = mags.iter().copied().fold(0.0, f64::max);
    let threshold = threshold_fraction * max;
    let mut peaks = Vec::new();
    for k in 0..m {
        let prev = mags[(k + m - 1) % m];
        let next = mags[(k + 1) % m];
        let here = mags[k];
        if !(here > threshold && here > prev && here > next) {
            continue;
        }
        let (offset, magnitude) = parabolic_offset(prev, here, next);
        let energy = ((k as f64 + offset) * spectrum.resolution).rem_euclid(spectrum.range);
        peaks.push(Peak { energy, magnitude });
    }
    peaks.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(PeakList { peaks })
}

/// Vertex of the parabola through `(-1, ln a)`, `(0, ln b)`, `(1, ln c)`.
fn parabolic_offset(a: f64, b: f64, c: f64) -> (f64, f64) {
    // Neighbours at roundoff level: the line sits on the bin.
    if a.min(c) <= 1e-12 * b {
        return (0.0, b);
    }
    let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
    let denom = la - 2.0 * lb + lc;
    if denom >= 0.0 {
        return (0.0, b);
    }
    let offset = (0.5 * (la - lc) / denom).clamp(-0.5, 0.5);
    (offset, (lb - 0.25 * (la - lc) * offset).exp())
}
