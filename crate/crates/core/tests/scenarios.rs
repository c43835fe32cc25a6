//! Worked examples across modules, each checked against an independent
//! closed form or a second numerical route.

use std::f64::consts::{FRAC_PI_2, PI};

use fockskin_core::dynamics::{evolve_direct, evolve_site, expand, normalized_distribution, time_grid};
use fockskin_core::eigen::{analytic_eigenset, max_residual, residual, verify_similarity, Branch};
use fockskin_core::ion::{proposal_check, IonParams, DEFAULT_THRESHOLD};
use fockskin_core::model::{build_h_eff, build_h_full, derive_couplings, project_ge, sigma_z, BasisSpec, Level, ModelParams, StateVector};
use fockskin_core::observables::{cell_distribution, ipr, mass_interval, mean_position, skin_shift};
use fockskin_core::uniform::{skin_profile, solve_uniform, UniformParams, ZERO_MODE_TOL};
use fockskin_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn params(j1: f64, j3: f64, phi: f64) -> ModelParams {
    ModelParams::new(j1, 1.0, j3, 50.0, phi).unwrap()
}

fn uniform(j1: f64, j3: f64, phi: f64, cells: usize) -> UniformParams {
    UniformParams::new(params(j1, j3, phi), cells).unwrap()
}

#[test]
fn chiral_symmetry_of_effective_hamiltonian() {
    for (j1, j3, phi) in [(1.5, 3.0, FRAC_PI_2), (0.6, 3.0, 0.4), (0.3, 1.0, -2.0), (3.0, 0.0, 0.0)] {
        let p = params(j1, j3, phi);
        let b = BasisSpec::effective(15);
        let h = build_h_eff(&p, &b, false).unwrap();
        let s = sigma_z(&b);
        let flipped = s.as_matrix() * h.as_matrix() * s.as_matrix();
        assert_eq!(flipped, -h.as_matrix());
    }
}

#[test]
fn zero_mode_is_robust_over_the_parameter_grid() {
    for j1 in [0.3, 0.6, 1.5, 3.0] {
        for j3 in [0.0, 1.0, 3.0] {
            for phi in [0.0, FRAC_PI_2, -FRAC_PI_2] {
                let p = params(j1, j3, phi);
                let eig = analytic_eigenset(&p, 3).unwrap();
                let h = build_h_eff(&p, &eig.basis, false).unwrap();
                let zero = eig.get(0, Branch::Zero).unwrap();
                assert_eq!(zero.energy, 0.0);
                let r = residual(zero, &h).unwrap();
                assert!(r < 1e-8, "J1={j1} J3={j3} phi={phi}: residual {r:e}");
            }
        }
    }
}

#[test]
fn energies_come_in_exact_pairs() {
    let eig = analytic_eigenset(&params(1.5, 3.0, -FRAC_PI_2), 30).unwrap();
    for n in 0..30 {
        let plus = eig.get(n, Branch::Plus).unwrap().energy;
        let minus = eig.get(n, Branch::Minus).unwrap().energy;
        assert_eq!(plus, -minus);
        assert!(plus > 0.0);
        if n > 0 {
            assert!(plus > eig.get(n - 1, Branch::Plus).unwrap().energy);
        }
    }
}

#[test]
fn similarity_vanishes_without_couplings() {
    assert_eq!(verify_similarity(&params(0.0, 0.0, 0.0), 20).unwrap(), 0.0);
}

#[test]
fn bare_jc_doublet_mean_position() {
    let eig = analytic_eigenset(&params(0.0, 0.0, 0.0), 2).unwrap();
    let m = mean_position(&eig.get(0, Branch::Plus).unwrap().right).unwrap();
    assert!((m - 0.5).abs() < 1e-15);
}

#[test]
fn skin_shift_signs_follow_the_phase() {
    let e0 = analytic_eigenset(&params(1.5, 0.0, 0.0), 51).unwrap();
    let left = analytic_eigenset(&params(1.5, 3.0, FRAC_PI_2), 51).unwrap();
    let right = analytic_eigenset(&params(1.5, 3.0, -FRAC_PI_2), 51).unwrap();
    assert!(skin_shift(&e0, &e0).unwrap().iter().all(|d| *d == 0.0));
    assert!(skin_shift(&left, &e0).unwrap().iter().all(|d| *d < 0.0));
    assert!(skin_shift(&right, &e0).unwrap().iter().all(|d| *d > 0.0));
    let short = analytic_eigenset(&params(1.5, 0.0, 0.0), 5).unwrap();
    assert!(matches!(skin_shift(&short, &e0), Err(Error::ModeMismatch(_))));
}

#[test]
fn reciprocal_modes_are_pinned_in_order() {
    let eig = analytic_eigenset(&params(1.5, 0.0, 0.0), 51).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for n in 0..51 {
        let m = mean_position(&eig.get(n, Branch::Plus).unwrap().right).unwrap();
        assert!(m > prev, "mode {n}: {m} <= {prev}");
        prev = m;
    }
    let d50 = cell_distribution(&eig.get(50, Branch::Plus).unwrap().right).unwrap();
    let (lo, hi) = mass_interval(&d50, 0.99);
    assert!(lo < 50 && hi > 50 && hi - lo < 60, "mode 50 support [{lo}, {hi}]");
    assert!((mean_position(&eig.get(50, Branch::Plus).unwrap().right).unwrap() - 50.5).abs() < 3.0);
}

#[test]
fn ipr_gain_peaks_at_the_zero_mode_for_small_intracell_coupling() {
    let e0 = analytic_eigenset(&params(0.6, 0.0, 0.0), 51).unwrap();
    let e3 = analytic_eigenset(&params(0.6, 3.0, FRAC_PI_2), 51).unwrap();
    let gains: Vec<f64> = e0
        .modes
        .iter()
        .zip(&e3.modes)
        .map(|(a, b)| ipr(&b.right).unwrap() - ipr(&a.right).unwrap())
        .collect();
    let best = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(gains[0], best);
}

#[test]
fn far_site_expansion_reconstructs() {
    let p = params(0.6, 3.0, FRAC_PI_2);
    let eig = analytic_eigenset(&p, 200).unwrap();
    let init = eig.basis_state(Level::G, 40).unwrap();
    let c = expand(&init, &eig, 1e-8).unwrap();
    assert!(c.truncation_tail < 1e-8);
}

#[test]
fn hermitian_dynamics_conserve_norm() {
    let (_, res) = evolve_site(&params(1.5, 0.0, 0.0), Level::G, 20, &time_grid(20.0, 81)).unwrap();
    assert!(res.norms.iter().all(|n| (n - 1.0).abs() < 1e-8));
    assert!(res.survival.unwrap().iter().all(|s| (s - 1.0).abs() < 1e-8));
}

#[test]
fn survival_from_g10_matches_three_level_model() {
    let p = params(0.6, 3.0, FRAC_PI_2);
    let times = time_grid(10.0, 101);
    let (_, res) = evolve_site(&p, Level::G, 10, &times).unwrap();
    let survival = res.survival.unwrap();
    assert!((survival[0] - 1.0).abs() < 1e-12);
    assert!(survival.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    let last = survival[100];
    assert!((last - 0.148292529315).abs() < 1e-9, "{last}");

    let fb = BasisSpec::full(60);
    let full = evolve_direct(
        &build_h_full(&p, &fb).unwrap(),
        &StateVector::basis_state(&fb, Level::G, 10).unwrap(),
        &times,
        1e-10,
    )
    .unwrap();
    let estimate = project_ge(&full.states[100]).norm_squared();
    assert!((estimate - last).abs() < 0.01 * last, "{estimate} vs {last}");
}

#[test]
fn normalized_distribution_examples() {
    let b = BasisSpec::effective(9);
    let d = normalized_distribution(&StateVector::basis_state(&b, Level::G, 7).unwrap()).unwrap();
    assert_eq!(d[7], 1.0);
    assert_eq!(d.iter().sum::<f64>(), 1.0);
    let twice = StateVector::basis_state(&b, Level::G, 3).unwrap().scaled(Complex64::new(2.0, 0.0));
    assert_eq!(normalized_distribution(&twice).unwrap()[3], 1.0);
    let mut pair = StateVector::zeros(&b);
    pair.set_amplitude(Level::G, 0, Complex64::new(0.5f64.sqrt(), 0.0)).unwrap();
    pair.set_amplitude(Level::E, 0, Complex64::new(0.5f64.sqrt(), 0.0)).unwrap();
    assert!((normalized_distribution(&pair).unwrap()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn ipr_and_mean_ignore_scale_and_phase() {
    let eig = analytic_eigenset(&params(1.5, 3.0, FRAC_PI_2), 12).unwrap();
    let v = &eig.get(7, Branch::Minus).unwrap().right;
    let w = v.scaled(Complex64::from_polar(3.7, 1.1));
    assert!((ipr(v).unwrap() - ipr(&w).unwrap()).abs() < 1e-14);
    assert!((mean_position(v).unwrap() - mean_position(&w).unwrap()).abs() < 1e-12);
}

#[test]
fn couplings_at_reversed_phase() {
    let c = derive_couplings(&params(0.6, 3.0, -FRAC_PI_2));
    assert!((c.g - 0.18).abs() < 1e-15);
    assert!((c.alpha1 - Complex64::new(0.42, 0.0)).norm() < 1e-15);
    assert!((c.alpha2 - Complex64::new(0.78, 0.0)).norm() < 1e-15);
}

#[test]
fn uniform_two_cell_spectrum_matches_characteristic_polynomial() {
    // [[0,a,0,0],[a,0,1,0],[0,1,0,a],[0,0,a,0]] has E² = (1 + 2a² ± √(1 + 4a²)) / 2
    let a: f64 = 0.6;
    let roots = [1.0 + 2.0 * a * a - (1.0 + 4.0 * a * a).sqrt(), 1.0 + 2.0 * a * a + (1.0 + 4.0 * a * a).sqrt()];
    let mut expect: Vec<f64> = roots.iter().flat_map(|r| [-(r / 2.0).sqrt(), (r / 2.0).sqrt()]).collect();
    expect.sort_by(f64::total_cmp);
    let eig = solve_uniform(&uniform(0.6, 0.0, 0.0, 2)).unwrap();
    for (m, e) in eig.modes.iter().zip(&expect) {
        assert!((m.energy - e).abs() < 1e-10, "{} vs {e}", m.energy);
    }
}

#[test]
fn uniform_reciprocal_chain_profile() {
    let eig = solve_uniform(&uniform(0.6, 0.0, 0.0, 100)).unwrap();
    let profile = skin_profile(&eig).unwrap();
    let mut edges = Vec::new();
    for &(e, mean, _) in &profile {
        if e.abs() < ZERO_MODE_TOL {
            edges.push(mean);
        } else {
            assert!((mean - 49.5).abs() <= 2.0, "bulk mode E={e}: mean {mean}");
        }
    }
    edges.sort_by(f64::total_cmp);
    assert_eq!(edges.len(), 2);
    assert!(edges[0] < 2.0 && edges[1] > 97.0, "{edges:?}");
}

#[test]
fn uniform_bulk_modes_skew_left_and_sharpen() {
    let p0 = skin_profile(&solve_uniform(&uniform(0.6, 0.0, 0.0, 100)).unwrap()).unwrap();
    let p3 = skin_profile(&solve_uniform(&uniform(0.6, 3.0, FRAC_PI_2, 100)).unwrap()).unwrap();
    for (a, b) in p0.iter().zip(&p3) {
        if a.0.abs() >= ZERO_MODE_TOL {
            assert!(b.1 < a.1, "E={}: {} !< {}", a.0, b.1, a.1);
            assert!(b.2 > a.2);
        }
    }
}

#[test]
fn uniform_skin_direction_and_phase() {
    let mean = |phi: f64, j3: f64| {
        let prof = skin_profile(&solve_uniform(&uniform(0.6, j3, phi, 100)).unwrap()).unwrap();
        prof.iter().map(|r| r.1).sum::<f64>() / prof.len() as f64
    };
    let base = mean(0.0, 0.0);
    assert!(mean(FRAC_PI_2, 3.0) < base);
    assert!(mean(-FRAC_PI_2, 3.0) > base);
}

#[test]
fn uniform_zero_modes_only_in_topological_phase() {
    for (j1, expected) in [(0.6, 2), (1.5, 0)] {
        for (j3, phi) in [(0.0, 0.0), (3.0, FRAC_PI_2), (3.0, -FRAC_PI_2)] {
            let eig = solve_uniform(&uniform(j1, j3, phi, 100)).unwrap();
            let zeros = eig.modes.iter().filter(|m| m.energy.abs() < ZERO_MODE_TOL).count();
            assert_eq!(zeros, expected, "J1={j1} J3={j3} phi={phi}");
        }
    }
}

#[test]
fn uniform_ipr_sharpens_as_dissipation_approaches_intracell_coupling() {
    let bulk_ipr = |j1: f64| {
        let prof = skin_profile(&solve_uniform(&uniform(j1, 3.0, FRAC_PI_2, 100)).unwrap()).unwrap();
        let bulk: Vec<f64> = prof.iter().filter(|r| r.0.abs() >= ZERO_MODE_TOL).map(|r| r.2).collect();
        bulk.iter().sum::<f64>() / bulk.len() as f64
    };
    assert!(bulk_ipr(0.6) > bulk_ipr(1.5));
}

#[test]
fn uniform_residuals_hold_across_valid_points() {
    for (j1, j3, phi) in [(0.6, 3.0, FRAC_PI_2), (0.6, 3.0, -FRAC_PI_2), (1.5, 3.0, FRAC_PI_2), (0.3, 2.0, -FRAC_PI_2), (2.0, 0.0, PI)] {
        let eig = solve_uniform(&uniform(j1, j3, phi, 100)).unwrap();
        let r = fockskin_core::uniform::max_residual(&eig);
        assert!(r < 1e-8, "J1={j1} J3={j3} phi={phi}: {r:e}");
    }
}

#[test]
fn uniform_matches_dense_eigenvalues() {
    // the chain is small enough for a dense cross-check via the real symmetric form of H·H
    let up = uniform(0.6, 3.0, FRAC_PI_2, 6);
    let h = fockskin_core::uniform::build_uniform_h(&up);
    let eig = solve_uniform(&up).unwrap();
    for m in &eig.modes {
        let hv = h.as_matrix() * m.right.amplitudes();
        let r = (hv - m.right.amplitudes() * Complex64::new(m.energy, 0.0)).norm();
        assert!(r < 1e-12);
    }
    let re: DMatrix<f64> = h.as_matrix().map(|z| z.re);
    let spectrum = re.complex_eigenvalues();
    let mut dense: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
    dense.sort_by(f64::total_cmp);
    for (m, d) in eig.modes.iter().zip(&dense) {
        assert!((m.energy - d).abs() < 1e-9, "{} vs {d}", m.energy);
    }
}

#[test]
fn max_residual_reports_forced_cutoff() {
    let eig = analytic_eigenset(&params(1.5, 3.0, FRAC_PI_2), 10).unwrap();
    assert!(max_residual(&eig).unwrap() < 1e-8);
}

#[test]
fn proposal_occupied_cell_is_stable_under_grid_refinement() {
    let p = params(0.6, 3.0, FRAC_PI_2);
    let ion = IonParams::new(0.05, DEFAULT_THRESHOLD).unwrap();
    let coarse = proposal_check(&p, 10, &ion, &time_grid(20.0, 201)).unwrap();
    let fine = proposal_check(&p, 10, &ion, &time_grid(20.0, 801)).unwrap();
    assert_eq!(coarse.max_occupied_cell, fine.max_occupied_cell);
    assert!(fine.max_occupied_cell <= 25);
}

#[test]
fn proposal_flags_start_beyond_cell_budget() {
    let p = params(0.6, 3.0, FRAC_PI_2);
    let ion = IonParams::new(0.1, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(ion.max_cells(), 9);
    let r = proposal_check(&p, 10, &ion, &time_grid(5.0, 51)).unwrap();
    assert!(!r.within_max_cells && !r.feasible);
}
