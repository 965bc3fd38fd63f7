//! The four batch pipelines behind the command line tool. Each takes a
//! validated [`Experiment`] and writes CSV/JSON files into its output
//! directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{Experiment, InitialState, Pipeline};
use crate::dynamics::{
    evolve_and_record, gaussian_state, hamiltonian_observable, kinetic_observable_with_mass, position_observable,
    potential_observable, Evolution, EvolveOptions, WaveFunction,
};
use crate::error::{Error, Result};
use crate::propagator::{build_kernel, compose_propagator, harmonic_exact_kernel, norm_profile, PropagatorMatrix};
use crate::spectral::{find_peaks, spectrum_from_trace, trace_ladder, EnergySpectrum, PeakList, TraceSeries};
use crate::tunneling::{
    localized_state, trial_energy, trial_states, tunnel_time_dynamic, tunnel_time_splitting, variational_fit, Parity,
    TrialParams, TunnelReport, VariationalFit, VariationalOptions,
};

/// Snapshot cadence of the tunnelling movie when the config sets none.
pub const DEFAULT_TUNNEL_STRIDE: usize = 55;

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub report: Option<TunnelReport>,
}

pub fn run(exp: &Experiment) -> Result<RunOutput> {
    fs::create_dir_all(&exp.output_dir)?;
    match exp.pipeline {
        Pipeline::Propagate => run_propagate(exp),
        Pipeline::Spectrum => run_spectrum(exp),
        Pipeline::Tunnel => run_tunnel(exp),
        Pipeline::Normcheck => run_normcheck(exp),
    }
}

/// The kernel phase `m (x_j - x_i)^2 / 2 dt` advances by up to `m L dx / dt`
/// per grid cell. Beyond `2 pi` it aliases and the squared propagator grows
/// without bound.
pub fn chirp_warning(exp: &Experiment) -> Option<String> {
    let width = exp.grid.x_max() - exp.grid.x_min();
    let limit = exp.model.mass() * width * exp.grid.dx() / (2.0 * std::f64::consts::PI);
    let dt = exp.slicing.dt();
    (dt < limit).then(|| {
        format!("slice width dt = {dt:.4} is below m L dx / 2 pi = {limit:.4}; the kernel chirp aliases on this grid and the propagator may diverge")
    })
}

/// `G(T)` from `N` slices of width `T / N`.
pub fn block_propagator(exp: &Experiment) -> Result<PropagatorMatrix> {
    let kernel = build_kernel(&exp.model, &exp.grid, exp.slicing.dt())?;
    compose_propagator(&kernel, exp.slicing.slices())
}

/// Writes a CSV file with a one-line header; floats carry 17 significant digits.
fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{v:.16e}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn evolve(exp: &Experiment, g: &PropagatorMatrix, psi0: &WaveFunction, default_stride: usize) -> Result<Evolution> {
    let observables = [
        position_observable(&exp.grid),
        kinetic_observable_with_mass(&exp.grid, exp.model.mass()),
        potential_observable(&exp.model, &exp.grid),
        hamiltonian_observable(&exp.model, &exp.grid),
    ];
    let options = EvolveOptions {
        snapshot_stride: Some(exp.snapshot_stride.unwrap_or(default_stride)),
        min_norm: exp.min_norm,
    };
    evolve_and_record(g, psi0, exp.steps, &observables, options)
}

fn write_evolution(exp: &Experiment, evo: &Evolution, out: &mut RunOutput) -> Result<()> {
    let path = exp.output_dir.join("expectations.csv");
    let labels = ["x", "T", "V", "H"];
    let series: Vec<&[f64]> = labels
        .iter()
        .map(|l| evo.series(l).map(|s| s.values.as_slice()).expect("observable recorded"))
        .collect();
    write_csv(
        &path,
        "t,x,T,V,H,norm",
        evo.times.iter().enumerate().map(|(k, &t)| {
            let mut row = vec![t];
            row.extend(series.iter().map(|s| s[k]));
            row.push(evo.norms[k]);
            row
        }),
    )?;
    out.files.push(path);

    let path = exp.output_dir.join("density.csv");
    let points: Vec<f64> = exp.grid.points().collect();
    write_csv(
        &path,
        "t,x,density",
        evo.snapshots
            .iter()
            .flat_map(|s| points.iter().zip(&s.density).map(move |(&x, &d)| vec![s.time, x, d])),
    )?;
    out.files.push(path);
    Ok(())
}

pub fn run_propagate(exp: &Experiment) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let psi0 = match exp.initial_state {
        Some(InitialState::Gaussian { alpha, x_start }) => gaussian_state(&exp.grid, alpha, x_start)?,
        Some(InitialState::Localized(trial)) => localized_from_fits(exp, &fit_trial_states(exp, trial)?)?,
        None => return Err(Error::Config("propagate needs an initial_state".into())),
    };
    let g = block_propagator(exp)?;
    let evo = evolve(exp, &g, &psi0, 1)?;
    write_evolution(exp, &evo, &mut out)?;
    Ok(out)
}

/// Trace ladder, its spectrum and the detected peaks.
pub fn spectrum_of(exp: &Experiment, g: &PropagatorMatrix) -> Result<(TraceSeries, EnergySpectrum, PeakList)> {
    let trace = trace_ladder(g, exp.slicing.blocks(), exp.renormalize)?;
    let spectrum = spectrum_from_trace(&trace)?;
    let peaks = find_peaks(&spectrum, exp.peak_threshold)?;
    Ok((trace, spectrum, peaks))
}

fn aliasing_warning(exp: &Experiment) -> Option<String> {
    let cap = 2.0 * std::f64::consts::PI / exp.slicing.block_time();
    let edge = exp
        .model
        .potential(exp.grid.x_min())
        .max(exp.model.potential(exp.grid.x_max()));
    (edge > cap).then(|| {
        format!("V at the grid edge ({edge:.4}) exceeds the energy range 2 pi / T = {cap:.4}; high levels alias into the spectrum")
    })
}

fn write_spectrum(
    exp: &Experiment,
    trace: &TraceSeries,
    spectrum: &EnergySpectrum,
    peaks: &PeakList,
    out: &mut RunOutput,
) -> Result<()> {
    let path = exp.output_dir.join("trace.csv");
    write_csv(
        &path,
        "t,re,im",
        trace
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| vec![trace.time(i), z.re, z.im]),
    )?;
    out.files.push(path);

    let path = exp.output_dir.join("spectrum.csv");
    write_csv(
        &path,
        "E,magnitude",
        spectrum
            .energies
            .iter()
            .zip(&spectrum.magnitudes)
            .map(|(&e, &m)| vec![e, m]),
    )?;
    out.files.push(path);

    let path = exp.output_dir.join("peaks.csv");
    write_csv(
        &path,
        "E,magnitude",
        peaks.peaks.iter().map(|p| vec![p.energy, p.magnitude]),
    )?;
    out.files.push(path);
    Ok(())
}

pub fn run_spectrum(exp: &Experiment) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    out.warnings.extend(aliasing_warning(exp));
    let g = block_propagator(exp)?;
    let (trace, spectrum, peaks) = spectrum_of(exp, &g)?;
    write_spectrum(exp, &trace, &spectrum, &peaks, &mut out)?;
    Ok(out)
}

/// Symmetric and antisymmetric trial fits, or the fixed parameters' energies.
pub fn fit_trial_states(exp: &Experiment, trial: Option<TrialParams>) -> Result<[VariationalFit; 2]> {
    let fit = |parity| -> Result<VariationalFit> {
        match trial {
            Some(p) => {
                let energy = trial_energy(&exp.model, &exp.grid, p, parity)?;
                Ok(VariationalFit {
                    parity,
                    params: p,
                    energy,
                    converged: true,
                    evaluations: 1,
                    history: Vec::new(),
                })
            }
            None => {
                let x_min = exp
                    .model
                    .double_well_params()
                    .ok_or_else(|| Error::Config("trial fit needs the double-well model".into()))?
                    .x_min;
                let init = TrialParams::new(1.0, x_min)?;
                variational_fit(&exp.model, &exp.grid, parity, init, &VariationalOptions::default())
            }
        }
    };
    Ok([fit(Parity::Symmetric)?, fit(Parity::Antisymmetric)?])
}

/// Localized state built from the symmetric fit's `T_S` and the
/// antisymmetric fit's `T_A`.
pub fn localized_from_fits(exp: &Experiment, fits: &[VariationalFit; 2]) -> Result<WaveFunction> {
    let (ts, _) = trial_states(&exp.grid, fits[0].params)?;
    let (_, ta) = trial_states(&exp.grid, fits[1].params)?;
    localized_state(&ts, &ta)
}

fn write_fit_log(exp: &Experiment, fits: &[VariationalFit; 2], out: &mut RunOutput) -> Result<()> {
    let path = exp.output_dir.join("fit_log.csv");
    let mut f = BufWriter::new(File::create(&path)?);
    writeln!(f, "parity,sweep,alpha,beta,energy,converged")?;
    for fit in fits {
        let parity = match fit.parity {
            Parity::Symmetric => "S",
            Parity::Antisymmetric => "A",
        };
        let mut rows: Vec<(usize, TrialParams, f64)> =
            fit.history.iter().map(|s| (s.sweep, s.params, s.energy)).collect();
        if rows.is_empty() {
            rows.push((0, fit.params, fit.energy));
        }
        for (sweep, p, e) in rows {
            writeln!(
                f,
                "{parity},{sweep},{:.16e},{:.16e},{:.16e},{}",
                p.alpha, p.beta, e, fit.converged
            )?;
        }
    }
    f.flush()?;
    out.files.push(path);
    if fits.iter().any(|f| !f.converged) {
        out.warnings
            .push("variational fit hit its sweep cap; best point reported".into());
    }
    Ok(())
}

pub fn run_tunnel(exp: &Experiment) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let trial = match exp.initial_state {
        Some(InitialState::Localized(t)) => t,
        None => None,
        Some(InitialState::Gaussian { .. }) => {
            return Err(Error::Config("tunnel starts from a localized state".into()))
        }
    };
    let fits = fit_trial_states(exp, trial)?;
    write_fit_log(exp, &fits, &mut out)?;
    let psi0 = localized_from_fits(exp, &fits)?;

    let g = block_propagator(exp)?;
    let evo = evolve(exp, &g, &psi0, DEFAULT_TUNNEL_STRIDE)?;
    write_evolution(exp, &evo, &mut out)?;
    let tau_dynamic = tunnel_time_dynamic(evo.series("x").expect("position recorded"))?;

    let (trace, spectrum, peaks) = spectrum_of(exp, &g)?;
    write_spectrum(exp, &trace, &spectrum, &peaks, &mut out)?;
    let [e_s_peak, e_a_peak] = match peaks.peaks.as_slice() {
        [a, b, ..] => [a.energy, b.energy],
        _ => {
            return Err(Error::Degenerate(format!(
                "spectrum shows {} peaks, need two",
                peaks.peaks.len()
            )))
        }
    };

    let report = TunnelReport {
        tau_dynamic,
        tau_split_variational: tunnel_time_splitting(fits[0].energy, fits[1].energy)?,
        tau_split_spectrum: tunnel_time_splitting(e_s_peak, e_a_peak)?,
        e_s_var: fits[0].energy,
        e_a_var: fits[1].energy,
        e_s_peak,
        e_a_peak,
    };
    let path = exp.output_dir.join("tunnel_report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    out.files.push(path);
    out.report = Some(report);
    Ok(out)
}

pub fn run_normcheck(exp: &Experiment) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let g = block_propagator(exp)?;
    let numeric = norm_profile(&g);
    let analytic = if exp.model.is_harmonic() {
        Some(norm_profile(&harmonic_exact_kernel(
            &exp.grid,
            exp.slicing.block_time(),
        )?))
    } else {
        None
    };
    let path = exp.output_dir.join("norm.csv");
    let mut f = BufWriter::new(File::create(&path)?);
    writeln!(f, "x,norm_numeric,norm_analytic")?;
    for (k, x) in exp.grid.points().enumerate() {
        write!(f, "{x:.16e},{:.16e},", numeric.values[k])?;
        if let Some(a) = &analytic {
            write!(f, "{:.16e}", a.values[k])?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    out.files.push(path);
    Ok(out)
}
