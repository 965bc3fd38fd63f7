//! C ABI over `pathprop`.
//!
//! Objects cross the boundary as opaque heap handles. Every entry point
//! returns a [`PpStatus`], writes results through out-pointers, and never
//! unwinds into the caller: panics are caught and reported as
//! `PP_STATUS_PANIC`. The message for the most recent failure on the
//! calling thread is available from [`pp_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use pathprop::dynamics::{
    apply_propagator, expectation, gaussian_state, hamiltonian_observable, kinetic_observable_with_mass,
    position_observable, potential_observable, ExpectationSeries, WaveFunction,
};
use pathprop::propagator::{
    build_kernel, compose_propagator, extend_propagator, harmonic_exact_kernel, norm_profile, read_propagator,
    renormalize, write_propagator,
};
use pathprop::spectral::{find_peaks, spectrum_from_trace, trace_ladder, TraceSeries};
use pathprop::tunneling::{tunnel_time_dynamic, tunnel_time_splitting};
use pathprop::{linalg, DoubleWellParams, Error, PotentialModel, PropagatorMatrix, SpatialGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    /// Non-finite values, norm decay or another numerical breakdown.
    Numeric = 4,
    NoTunnelEvent = 5,
    Io = 6,
    /// The caller's buffer is too short; the required length was written.
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpObservable {
    Position = 0,
    Kinetic = 1,
    Potential = 2,
    Hamiltonian = 3,
}

pub struct PpGrid {
    inner: SpatialGrid,
}

pub struct PpModel {
    inner: PotentialModel,
}

pub struct PpPropagator {
    inner: PropagatorMatrix,
}

pub struct PpWavefunction {
    inner: WaveFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: PpStatus,
    message: String,
}

impl Failure {
    fn new(status: PpStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::GridMismatch => PpStatus::GridMismatch,
            Error::NoTunnelEvent(_) => PpStatus::NoTunnelEvent,
            Error::Io(_) => PpStatus::Io,
            e if e.is_validation() => PpStatus::InvalidArgument,
            _ => PpStatus::Numeric,
        };
        Self::new(status, e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult) -> PpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            PpStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            PpStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(PpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(PpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(PpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::new(PpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult {
    let out = borrow_mut(out, "output handle")?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> FfiResult {
    *borrow_mut(out, "output pointer")? = value;
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(PpStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(PpStatus::InvalidArgument, "path is not valid UTF-8"))
}

fn check_len(have: usize, need: usize, what: &str) -> FfiResult {
    if have < need {
        return Err(Failure::new(
            PpStatus::BufferTooSmall,
            format!("{what} holds {have} values, needs {need}"),
        ));
    }
    Ok(())
}

/// Message for the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn pp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Threads used for matrix products; 0 restores the default.
#[no_mangle]
pub extern "C" fn pp_set_threads(threads: usize) -> PpStatus {
    guard(|| {
        linalg::set_thread_count(threads);
        Ok(())
    })
}

// Grid

#[no_mangle]
pub unsafe extern "C" fn pp_grid_new(x_min: f64, x_max: f64, intervals: usize, out: *mut *mut PpGrid) -> PpStatus {
    guard(|| {
        let inner = SpatialGrid::new(x_min, x_max, intervals)?;
        put(out, PpGrid { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_grid_free(grid: *mut PpGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid points, `intervals + 1`.
#[no_mangle]
pub unsafe extern "C" fn pp_grid_len(grid: *const PpGrid, out: *mut usize) -> PpStatus {
    guard(|| put_value(out, borrow(grid, "grid")?.inner.len()))
}

#[no_mangle]
pub unsafe extern "C" fn pp_grid_dx(grid: *const PpGrid, out: *mut f64) -> PpStatus {
    guard(|| put_value(out, borrow(grid, "grid")?.inner.dx()))
}

/// Copies the grid points into `out[0..len]`.
#[no_mangle]
pub unsafe extern "C" fn pp_grid_points(grid: *const PpGrid, out: *mut f64, len: usize) -> PpStatus {
    guard(|| {
        let g = &borrow(grid, "grid")?.inner;
        check_len(len, g.len(), "points buffer")?;
        for (o, x) in slice_mut(out, len, "points buffer")?.iter_mut().zip(g.points()) {
            *o = x;
        }
        Ok(())
    })
}

// Model

#[no_mangle]
pub unsafe extern "C" fn pp_model_harmonic(out: *mut *mut PpModel) -> PpStatus {
    guard(|| {
        put(
            out,
            PpModel {
                inner: PotentialModel::harmonic(),
            },
        )
    })
}

/// `V(x) = alpha (x^2 - x_min^2)^2`.
#[no_mangle]
pub unsafe extern "C" fn pp_model_double_well(alpha: f64, x_min: f64, out: *mut *mut PpModel) -> PpStatus {
    guard(|| {
        let inner = PotentialModel::double_well(DoubleWellParams::new(alpha, x_min)?)?;
        put(out, PpModel { inner })
    })
}

/// `V(x) = sum_k coeffs[k] x^k`.
#[no_mangle]
pub unsafe extern "C" fn pp_model_custom(
    coeffs: *const f64,
    len: usize,
    mass: f64,
    out: *mut *mut PpModel,
) -> PpStatus {
    guard(|| {
        let c = slice(coeffs, len, "coefficients")?.to_vec();
        let inner = PotentialModel::custom(c, mass)?;
        put(out, PpModel { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_model_free(model: *mut PpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pp_model_potential(model: *const PpModel, x: f64, out: *mut f64) -> PpStatus {
    guard(|| put_value(out, borrow(model, "model")?.inner.potential(x)))
}

// Propagator

/// `G(T)` from `slices` short-time kernels of width `block_time / slices`.
/// `slices` must be a power of two.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_compose(
    model: *const PpModel,
    grid: *const PpGrid,
    block_time: f64,
    slices: usize,
    out: *mut *mut PpPropagator,
) -> PpStatus {
    guard(|| {
        let model = &borrow(model, "model")?.inner;
        let grid = &borrow(grid, "grid")?.inner;
        if slices == 0 {
            return Err(Failure::new(PpStatus::InvalidArgument, "slices must be positive"));
        }
        let kernel = build_kernel(model, grid, block_time / slices as f64)?;
        let inner = compose_propagator(&kernel, slices)?;
        put(out, PpPropagator { inner })
    })
}

/// Closed-form harmonic oscillator propagator sampled on the grid.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_harmonic_exact(
    grid: *const PpGrid,
    t: f64,
    out: *mut *mut PpPropagator,
) -> PpStatus {
    guard(|| {
        let inner = harmonic_exact_kernel(&borrow(grid, "grid")?.inner, t)?;
        put(out, PpPropagator { inner })
    })
}

/// `G(t_block + t_prev) = G(t_block) G(t_prev) dx`.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_extend(
    block: *const PpPropagator,
    prev: *const PpPropagator,
    out: *mut *mut PpPropagator,
) -> PpStatus {
    guard(|| {
        let inner = extend_propagator(&borrow(block, "block")?.inner, &borrow(prev, "prev")?.inner)?;
        put(out, PpPropagator { inner })
    })
}

/// Rescales `g` in place so its mean norm profile is 1.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_renormalize(g: *mut PpPropagator) -> PpStatus {
    guard(|| {
        let g = borrow_mut(g, "propagator")?;
        g.inner = renormalize(&g.inner)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_propagator_free(g: *mut PpPropagator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of grid points (rows) of `g`.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_dim(g: *const PpPropagator, out: *mut usize) -> PpStatus {
    guard(|| put_value(out, borrow(g, "propagator")?.inner.grid().len()))
}

#[no_mangle]
pub unsafe extern "C" fn pp_propagator_elapsed(g: *const PpPropagator, out: *mut f64) -> PpStatus {
    guard(|| put_value(out, borrow(g, "propagator")?.inner.elapsed()))
}

/// Copies the entries row-major as interleaved (re, im) pairs into
/// `out[0..len]`; `len` must be at least `2 * dim * dim`.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_entries(g: *const PpPropagator, out: *mut f64, len: usize) -> PpStatus {
    guard(|| {
        let entries = borrow(g, "propagator")?.inner.entries().as_slice();
        check_len(len, 2 * entries.len(), "entries buffer")?;
        let buf = slice_mut(out, len, "entries buffer")?;
        for (pair, z) in buf.chunks_exact_mut(2).zip(entries) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// `dx * sum_k G_kk`.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_trace(g: *const PpPropagator, re: *mut f64, im: *mut f64) -> PpStatus {
    guard(|| {
        let t = borrow(g, "propagator")?.inner.trace();
        put_value(re, t.re)?;
        put_value(im, t.im)
    })
}

/// Per-start-point norm profile, one value per grid point.
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_norm_profile(g: *const PpPropagator, out: *mut f64, len: usize) -> PpStatus {
    guard(|| {
        let profile = norm_profile(&borrow(g, "propagator")?.inner);
        check_len(len, profile.values.len(), "profile buffer")?;
        slice_mut(out, len, "profile buffer")?[..profile.values.len()].copy_from_slice(&profile.values);
        Ok(())
    })
}

/// Writes the binary dump (32-byte little-endian header, then entries).
#[no_mangle]
pub unsafe extern "C" fn pp_propagator_save(g: *const PpPropagator, file: *const c_char) -> PpStatus {
    guard(|| {
        let g = &borrow(g, "propagator")?.inner;
        let f = File::create(path(file)?).map_err(Error::from)?;
        write_propagator(g, BufWriter::new(f))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_propagator_load(file: *const c_char, out: *mut *mut PpPropagator) -> PpStatus {
    guard(|| {
        let f = File::open(path(file)?).map_err(Error::from)?;
        let inner = read_propagator(BufReader::new(f))?;
        put(out, PpPropagator { inner })
    })
}

// Wavefunction

/// Normalized Gaussian `exp(-alpha (x - x_start)^2 / 2)`.
#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_gaussian(
    grid: *const PpGrid,
    alpha: f64,
    x_start: f64,
    out: *mut *mut PpWavefunction,
) -> PpStatus {
    guard(|| {
        let inner = gaussian_state(&borrow(grid, "grid")?.inner, alpha, x_start)?;
        put(out, PpWavefunction { inner })
    })
}

/// Builds a state from interleaved (re, im) amplitudes, `len = 2 * points`,
/// and normalizes it.
#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_from_amplitudes(
    grid: *const PpGrid,
    amplitudes: *const f64,
    len: usize,
    out: *mut *mut PpWavefunction,
) -> PpStatus {
    guard(|| {
        let grid = borrow(grid, "grid")?.inner;
        if len != 2 * grid.len() {
            return Err(Failure::new(
                PpStatus::InvalidArgument,
                format!("expected {} values, got {len}", 2 * grid.len()),
            ));
        }
        let amps = slice(amplitudes, len, "amplitudes")?
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let inner = WaveFunction::normalized(grid, amps)?;
        put(out, PpWavefunction { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_free(psi: *mut PpWavefunction) {
    if !psi.is_null() {
        drop(Box::from_raw(psi));
    }
}

/// `psi' = dx G psi`, without renormalization.
#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_apply(
    g: *const PpPropagator,
    psi: *const PpWavefunction,
    out: *mut *mut PpWavefunction,
) -> PpStatus {
    guard(|| {
        let inner = apply_propagator(&borrow(g, "propagator")?.inner, &borrow(psi, "wavefunction")?.inner)?;
        put(out, PpWavefunction { inner })
    })
}

/// Discrete norm `dx sum |psi|^2`.
#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_norm(psi: *const PpWavefunction, out: *mut f64) -> PpStatus {
    guard(|| put_value(out, borrow(psi, "wavefunction")?.inner.norm()))
}

/// Interleaved (re, im) amplitudes into `out[0..len]`, `len >= 2 * points`.
#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_amplitudes(psi: *const PpWavefunction, out: *mut f64, len: usize) -> PpStatus {
    guard(|| {
        let amps = borrow(psi, "wavefunction")?.inner.amplitudes();
        check_len(len, 2 * amps.len(), "amplitude buffer")?;
        for (pair, z) in slice_mut(out, len, "amplitude buffer")?.chunks_exact_mut(2).zip(amps) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Norm-insensitive expectation value. `model` supplies `V` and the mass.
#[no_mangle]
pub unsafe extern "C" fn pp_wavefunction_expectation(
    psi: *const PpWavefunction,
    model: *const PpModel,
    observable: PpObservable,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let psi = &borrow(psi, "wavefunction")?.inner;
        let model = &borrow(model, "model")?.inner;
        let grid = psi.grid();
        let o = match observable {
            PpObservable::Position => position_observable(grid),
            PpObservable::Kinetic => kinetic_observable_with_mass(grid, model.mass()),
            PpObservable::Potential => potential_observable(model, grid),
            PpObservable::Hamiltonian => hamiltonian_observable(model, grid),
        };
        put_value(out, expectation(psi, &o)?)
    })
}

// Spectra and tunnelling

/// `Tr G(t_i)` for `t_i = (i + 1) T`, `i = 0..=n_blocks`, as interleaved
/// (re, im) pairs; `len >= 2 * (n_blocks + 1)`.
#[no_mangle]
pub unsafe extern "C" fn pp_trace_ladder(
    block: *const PpPropagator,
    n_blocks: usize,
    renormalize_each: bool,
    out: *mut f64,
    len: usize,
) -> PpStatus {
    guard(|| {
        let g = &borrow(block, "propagator")?.inner;
        check_len(len, 2 * (n_blocks + 1), "trace buffer")?;
        let trace = trace_ladder(g, n_blocks, renormalize_each)?;
        for (pair, z) in slice_mut(out, len, "trace buffer")?
            .chunks_exact_mut(2)
            .zip(&trace.values)
        {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Energy peaks of an interleaved trace sampled every `block_time`.
/// `count` receives the number of peaks; if it exceeds `capacity`, nothing
/// is copied and `PP_STATUS_BUFFER_TOO_SMALL` is returned.
#[no_mangle]
pub unsafe extern "C" fn pp_spectrum_peaks(
    trace: *const f64,
    samples: usize,
    block_time: f64,
    threshold_fraction: f64,
    energies: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> PpStatus {
    guard(|| {
        let values = slice(trace, 2 * samples, "trace")?
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let spectrum = spectrum_from_trace(&TraceSeries { values, block_time })?;
        let peaks = find_peaks(&spectrum, threshold_fraction)?;
        put_value(count, peaks.peaks.len())?;
        check_len(capacity, peaks.peaks.len(), "peak buffer")?;
        for (o, p) in slice_mut(energies, capacity, "peak buffer")?
            .iter_mut()
            .zip(&peaks.peaks)
        {
            *o = p.energy;
        }
        Ok(())
    })
}

/// `pi / (e_a - e_s)`.
#[no_mangle]
pub unsafe extern "C" fn pp_tunnel_time_splitting(e_s: f64, e_a: f64, out: *mut f64) -> PpStatus {
    guard(|| put_value(out, tunnel_time_splitting(e_s, e_a)?))
}

/// First sign-reversed extremum of a uniformly sampled `<x>(t)`.
#[no_mangle]
pub unsafe extern "C" fn pp_tunnel_time_dynamic(
    times: *const f64,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let series = ExpectationSeries {
            observable: "x".into(),
            times: slice(times, len, "times")?.to_vec(),
            values: slice(values, len, "values")?.to_vec(),
        };
        put_value(out, tunnel_time_dynamic(&series)?)
    })
}
