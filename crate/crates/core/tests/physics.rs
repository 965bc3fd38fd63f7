//! Physical laws the lattice propagator obeys exactly or to a known order,
//! checked against closed-form oracles.

use std::f64::consts::PI;

use num_complex::Complex64;
use pathprop::dynamics::{
    evolve_and_record, expectation, gaussian_state, hamiltonian_observable, position_observable, EvolveOptions,
};
use pathprop::model::HARMONIC_PERIOD;
use pathprop::propagator::{
    build_backward_kernel, build_kernel, compose_propagator, extend_propagator, harmonic_exact_kernel, norm_profile,
    renormalize,
};
use pathprop::spectral::trace_ladder;
use pathprop::tunneling::{
    localized_state, parity_weights, right_fraction, stencil_levels, trial_energy, trial_states, Parity, TrialParams,
};
use pathprop::{DoubleWellParams, PotentialModel, PropagatorMatrix, SpatialGrid};

fn paper_grid() -> SpatialGrid {
    SpatialGrid::new(-7.0, 7.0, 600).unwrap()
}

fn double_well() -> PotentialModel {
    PotentialModel::double_well(DoubleWellParams::new(0.021_571_84, 2.475_669_57).unwrap()).unwrap()
}

fn harmonic_block(slices: usize) -> PropagatorMatrix {
    let dt = HARMONIC_PERIOD / 16.0 / slices as f64;
    compose_propagator(
        &build_kernel(&PotentialModel::harmonic(), &paper_grid(), dt).unwrap(),
        slices,
    )
    .unwrap()
}

/// Each midpoint slice of the harmonic kernel is the exact propagator for
/// the angle `2 atan(dt / 2)`, scaled by `(1 + dt^2 / 4)^(-1/2)`.
fn slice_angle(dt: f64) -> f64 {
    2.0 * (dt / 2.0).atan()
}

#[test]
fn harmonic_rotation_angle_and_norm_law() {
    let g = harmonic_block(4);
    let grid = paper_grid();
    let dt = HARMONIC_PERIOD / 64.0;
    let theta = 4.0 * slice_angle(dt);
    for (alpha, x0) in [(2.0, 1.0), (1.0, 1.0), (0.5, 1.0)] {
        let psi = gaussian_state(&grid, alpha, x0).unwrap();
        let evo = evolve_and_record(&g, &psi, 16, &[position_observable(&grid)], EvolveOptions::default()).unwrap();
        let x = &evo.series("x").unwrap().values;
        for (k, xk) in x.iter().enumerate() {
            let law = x0 * (k as f64 * theta).cos();
            assert!((xk - law).abs() < 1e-6, "alpha {alpha}, step {k}: {xk} vs {law}");
            let norm = (1.0 + dt * dt / 4.0).powi(-4 * k as i32);
            assert!((evo.norms[k] - norm).abs() < 1e-7, "alpha {alpha}, step {k}");
        }
    }
}

#[test]
fn ground_state_is_stationary() {
    let grid = paper_grid();
    let g = harmonic_block(4);
    let psi = gaussian_state(&grid, 1.0, 0.0).unwrap();
    let h = hamiltonian_observable(&PotentialModel::harmonic(), &grid);
    let evo = evolve_and_record(&g, &psi, 8, &[h], EvolveOptions::default()).unwrap();
    for e in &evo.series("H").unwrap().values {
        assert!((e - evo.series("H").unwrap().values[0]).abs() < 1e-12);
    }
    // Overlap with the initial state only picks up the phase exp(-i E t).
    let overlap = evo.final_state.overlap(&psi).unwrap() / evo.final_state.norm().sqrt();
    let phase = (-0.5 * 8.0 * 4.0 * slice_angle(HARMONIC_PERIOD / 64.0)).rem_euclid(2.0 * PI);
    let got = overlap.conj().arg().rem_euclid(2.0 * PI);
    assert!((overlap.norm() - 1.0).abs() < 1e-10);
    assert!((got - phase).abs() < 1e-8, "{got} vs {phase}");
}

#[test]
fn energy_returns_after_one_period() {
    let grid = paper_grid();
    let g = harmonic_block(4);
    let h = hamiltonian_observable(&PotentialModel::harmonic(), &grid);
    for alpha in [2.0, 1.0] {
        let psi = gaussian_state(&grid, alpha, 1.0).unwrap();
        let evo = evolve_and_record(&g, &psi, 16, std::slice::from_ref(&h), EvolveOptions::default()).unwrap();
        let e = &evo.series("H").unwrap().values;
        assert!(((e[16] - e[0]) / e[0]).abs() < 1e-8, "alpha {alpha}");
        // In between, the stencil's O(dx^2) kinetic error follows <p^4>.
        let excursion = e.iter().map(|v| ((v - e[0]) / e[0]).abs()).fold(0.0, f64::max);
        assert!(excursion < 2e-4, "alpha {alpha}: {excursion}");
    }
}

#[test]
fn squaring_agrees_with_step_by_step_ladder() {
    let grid = SpatialGrid::new(-7.0, 7.0, 200).unwrap();
    for model in [PotentialModel::harmonic(), double_well()] {
        let k = build_kernel(&model, &grid, 0.2).unwrap();
        let g1 = compose_propagator(&k, 1).unwrap();
        let mut acc = g1.clone();
        for _ in 0..7 {
            acc = extend_propagator(&g1, &acc).unwrap();
        }
        let g8 = compose_propagator(&k, 8).unwrap();
        let scale = g8.entries().as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(g8.entries().max_abs_diff(acc.entries()) < 1e-10 * scale);
        assert!((acc.elapsed() - g8.elapsed()).abs() < 1e-15);
    }
}

#[test]
fn backward_propagator_is_the_adjoint() {
    let grid = SpatialGrid::new(-5.0, 5.0, 120).unwrap();
    let model = double_well();
    let fwd = compose_propagator(&build_kernel(&model, &grid, 0.3).unwrap(), 4).unwrap();
    let bwd = compose_propagator(&build_backward_kernel(&model, &grid, 0.3).unwrap(), 4).unwrap();
    assert!((bwd.elapsed() + fwd.elapsed()).abs() < 1e-15);
    assert!(bwd.entries().max_abs_diff(&fwd.entries().conj_transpose()) < 1e-12);
    // Time reversal conjugates the trace.
    let (tf, tb) = (fwd.trace(), bwd.trace());
    assert!((tf.conj() - tb).norm() < 1e-12 * tf.norm().max(1.0));
}

#[test]
fn renormalized_ladder_keeps_unit_mean_norm() {
    let grid = SpatialGrid::new(-7.0, 7.0, 300).unwrap();
    let dt = PI / 7.0 / 4.0;
    let g = compose_propagator(&build_kernel(&PotentialModel::harmonic(), &grid, dt).unwrap(), 4).unwrap();
    let plain = trace_ladder(&g, 20, false).unwrap();
    let renorm = trace_ladder(&g, 20, true).unwrap();
    assert_eq!(plain.values[0], renorm.values[0]);
    // Unrenormalized traces shrink with the lattice norm loss.
    assert!(plain.values[20].norm() < renorm.values[20].norm());
    let mean = |p: &PropagatorMatrix| norm_profile(p).mean();
    assert!((mean(&renormalize(&g).unwrap()) - 1.0).abs() < 1e-12);
}

#[test]
fn analytic_kernel_composes_with_itself() {
    // The closed form obeys the same composition law up to lattice error.
    let grid = paper_grid();
    let a = harmonic_exact_kernel(&grid, 0.5).unwrap();
    let b = harmonic_exact_kernel(&grid, 1.0).unwrap();
    let ab = extend_propagator(&a, &a).unwrap();
    let pts: Vec<f64> = grid.points().collect();
    let mut err = 0.0;
    let mut count = 0;
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            if x.abs() <= 3.0 && y.abs() <= 3.0 {
                err += (ab.entries()[(i, j)] - b.entries()[(i, j)]).norm();
                count += 1;
            }
        }
    }
    let c = (1.0 / (2.0 * PI * 1.0f64.sin())).sqrt();
    assert!(err / (count as f64) < 0.05 * c, "{}", err / count as f64);
}

#[test]
fn trial_states_respect_rayleigh_ritz() {
    let grid = paper_grid();
    let model = double_well();
    let levels = stencil_levels(&model, &grid, 2).unwrap();
    let seeds = [
        (0.3, 0.2),
        (0.5, 1.0),
        (0.8, 2.0),
        (1.0, 2.4),
        (1.2, 2.6),
        (2.0, 3.5),
        (3.0, 0.7),
        (0.9, 3.7),
    ];
    for (alpha, beta) in seeds {
        let p = TrialParams::new(alpha, beta).unwrap();
        let es = trial_energy(&model, &grid, p, Parity::Symmetric).unwrap();
        let ea = trial_energy(&model, &grid, p, Parity::Antisymmetric).unwrap();
        assert!(es > levels[0], "{p:?}: {es} vs {}", levels[0]);
        assert!(ea > levels[1], "{p:?}: {ea} vs {}", levels[1]);
    }
}

#[test]
fn localized_state_construction() {
    let grid = paper_grid();
    let model = double_well();
    let p = TrialParams::new(0.99, 2.21).unwrap();
    let (ts, ta) = trial_states(&grid, p).unwrap();
    let psi = localized_state(&ts, &ta).unwrap();
    assert!(right_fraction(&psi) > 0.95);
    let h = hamiltonian_observable(&model, &grid);
    let (es, ea) = (expectation(&ts, &h).unwrap(), expectation(&ta, &h).unwrap());
    assert!((expectation(&psi, &h).unwrap() - 0.5 * (es + ea)).abs() < 1e-10);
    let (even, odd) = parity_weights(&psi).unwrap();
    assert!((even - 0.5).abs() < 1e-12 && (odd - 0.5).abs() < 1e-12);
}

#[test]
fn propagation_conserves_parity() {
    let grid = paper_grid();
    let model = double_well();
    let g = compose_propagator(&build_kernel(&model, &grid, PI / 32.0).unwrap(), 4).unwrap();
    let (ts, ta) = trial_states(&grid, TrialParams::new(1.0, 2.2).unwrap()).unwrap();
    let options = EvolveOptions {
        min_norm: 0.0,
        ..Default::default()
    };
    // About one tunnelling period.
    for (psi, wrong) in [(&ts, 1), (&ta, 0)] {
        let evo = evolve_and_record(&g, psi, 140, &[], options).unwrap();
        let w = parity_weights(&evo.final_state).unwrap();
        let leak = if wrong == 1 { w.1 } else { w.0 };
        assert!(leak < 1e-6, "{leak}");
    }
}

#[test]
fn synthetic_propagator_trace_gives_its_levels() {
    // G = sum_n exp(-i E_n T) |n><n| / dx on a diagonal basis has trace
    // sum_n exp(-i E_n T), and the ladder multiplies phases exactly.
    let grid = SpatialGrid::new(-1.0, 1.0, 3).unwrap();
    let energies = [0.3, 1.1, 2.0, 2.9];
    let t = 0.4;
    let mut m = pathprop::linalg::ComplexMatrix::zeros(4);
    for (k, e) in energies.iter().enumerate() {
        m[(k, k)] = Complex64::cis(-e * t) / grid.dx();
    }
    let g = PropagatorMatrix::from_parts(grid, t, m).unwrap();
    let trace = trace_ladder(&g, 9, false).unwrap();
    for (i, z) in trace.values.iter().enumerate() {
        let want: Complex64 = energies.iter().map(|e| Complex64::cis(-e * t * (i + 1) as f64)).sum();
        assert!((z - want).norm() < 1e-12);
    }
}

#[test]
fn propagation_is_linear() {
    let grid = SpatialGrid::new(-7.0, 7.0, 300).unwrap();
    let g = compose_propagator(&build_kernel(&double_well(), &grid, 0.2).unwrap(), 2).unwrap();
    let a = gaussian_state(&grid, 1.0, 1.5).unwrap();
    let b = gaussian_state(&grid, 0.7, -2.0).unwrap();
    let (ca, cb) = (Complex64::new(0.3, -1.2), Complex64::new(-0.8, 0.5));
    let lhs = pathprop::dynamics::apply_propagator(&g, &a.combine(ca, &b, cb).unwrap()).unwrap();
    let rhs = pathprop::dynamics::apply_propagator(&g, &a)
        .unwrap()
        .combine(ca, &pathprop::dynamics::apply_propagator(&g, &b).unwrap(), cb)
        .unwrap();
    for (x, y) in lhs.amplitudes().iter().zip(rhs.amplitudes()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn potential_never_reaches_the_full_energy() {
    // The alpha = 2 packet is squeezed, so <V> peaks below <H> instead of at
    // the classical turning points.
    let grid = paper_grid();
    let model = PotentialModel::harmonic();
    let psi = gaussian_state(&grid, 2.0, 1.0).unwrap();
    let obs = [
        pathprop::dynamics::potential_observable(&model, &grid),
        hamiltonian_observable(&model, &grid),
    ];
    let evo = evolve_and_record(&harmonic_block(4), &psi, 16, &obs, EvolveOptions::default()).unwrap();
    let v_max = evo.series("V").unwrap().values.iter().copied().fold(f64::MIN, f64::max);
    let h = evo.series("H").unwrap().values[0];
    assert!(v_max < h, "{v_max} vs {h}");
}
