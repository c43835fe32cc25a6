//! Conditional (no-jump) time evolution.
//!
//! The analytic route expands the initial state in the biorthogonal
//! eigenbasis and evolves each mode by its phase. The direct route integrates
//! the Schrödinger equation with an adaptive Runge–Kutta scheme and serves as
//! an independent check; it is also the only route for the full three-level
//! model.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::eigen::{analytic_eigenset, Branch, EigenSet};
use crate::error::{Error, Result};
use crate::integrator::{Propagator, StepObserver, Tolerances};
use crate::model::{build_h_eff, ComplexMatrix, Level, ModelParams, StateVector};
use crate::observables::cell_distribution;

pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_T_END: f64 = 20.0;
pub const DEFAULT_T_STEPS: usize = 400;
/// Initial states must keep the top 32 cells below this relative mass.
pub const INITIAL_TOP_MASS: f64 = 1e-16;
/// Relative mass on the last cell that aborts a direct integration.
pub const BREACH_MASS: f64 = 1e-8;

/// `steps` evenly spaced times from 0 to `t_end` inclusive.
pub fn time_grid(t_end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps).map(|i| t_end * i as f64 / (steps - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    /// Coefficients aligned with the eigenset's mode order; entry 0 is c0.
    pub coefficients: Vec<Complex64>,
    /// ‖Ψ(0) − Σ c |ψ^R⟩‖, the part of the initial state the modes miss.
    pub truncation_tail: f64,
}

impl ExpansionCoefficients {
    pub fn get(&self, eig: &EigenSet, n: usize, branch: Branch) -> Option<Complex64> {
        eig.modes
            .iter()
            .position(|t| t.n == n && t.branch == branch)
            .map(|i| self.coefficients[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub norms: Vec<f64>,
    pub survival: Option<Vec<f64>>,
}

impl EvolutionResult {
    fn from_states(times: Vec<f64>, states: Vec<StateVector>) -> Self {
        let norms = states.iter().map(StateVector::norm).collect();
        Self { times, states, norms, survival: None }
    }

    /// Cell distributions P(n, t), one row per time.
    pub fn distributions(&self) -> Result<Vec<Vec<f64>>> {
        self.states.iter().map(normalized_distribution).collect()
    }
}

/// c = ⟨ψ^L|Ψ(0)⟩ for every mode of `eig`.
pub fn expand(initial: &StateVector, eig: &EigenSet, tail_tol: f64) -> Result<ExpansionCoefficients> {
    if initial.basis() != &eig.basis {
        return Err(Error::DimensionMismatch("initial state and eigenset bases differ".into()));
    }
    let coefficients: Vec<Complex64> = eig.modes.iter().map(|t| t.left.inner(initial)).collect();
    let mut recon = DVector::<Complex64>::zeros(eig.basis.dim());
    for (t, c) in eig.modes.iter().zip(&coefficients) {
        recon.axpy(*c, t.right.amplitudes(), Complex64::new(1.0, 0.0));
    }
    let truncation_tail = (initial.amplitudes() - recon).norm();
    if !(truncation_tail < tail_tol) {
        return Err(Error::ModeBudgetExceeded { tail: truncation_tail, tol: tail_tol });
    }
    Ok(ExpansionCoefficients { coefficients, truncation_tail })
}

/// Σ c e^{−iEt} |ψ^R⟩ at each requested time; states stay unnormalized.
pub fn evolve_analytic(coeffs: &ExpansionCoefficients, eig: &EigenSet, times: &[f64]) -> Result<EvolutionResult> {
    if coeffs.coefficients.len() != eig.modes.len() {
        return Err(Error::ModeMismatch("coefficients do not match the eigenset".into()));
    }
    check_times(times)?;
    let states = times
        .iter()
        .map(|&t| {
            let mut psi = DVector::<Complex64>::zeros(eig.basis.dim());
            for (mode, c) in eig.modes.iter().zip(&coeffs.coefficients) {
                let w = c * Complex64::from_polar(1.0, -mode.energy * t);
                psi.axpy(w, mode.right.amplitudes(), Complex64::new(1.0, 0.0));
            }
            StateVector::from_amplitudes(&eig.basis, psi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionResult::from_states(times.to_vec(), states))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParams("time grid is empty".into()));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || !times[0].is_finite() {
        return Err(Error::InvalidParams("time grid must be ascending".into()));
    }
    Ok(())
}

struct BreachWatch<'a> {
    basis: &'a crate::model::BasisSpec,
}

impl StepObserver for BreachWatch<'_> {
    fn accepted(&mut self, t: f64, y: &[Complex64]) -> Result<()> {
        let top = self.basis.n_max();
        let mut total = 0.0;
        let mut edge = 0.0;
        for ((_, n), z) in self.basis.iter().zip(y) {
            let w = z.norm_sqr();
            total += w;
            if n == top {
                edge += w;
            }
        }
        if total > 0.0 && edge / total > BREACH_MASS {
            return Err(Error::CutoffBreach { t, mass: edge / total });
        }
        Ok(())
    }
}

/// Integrates dΨ/dt = −iHΨ from `times[0]` with local relative tolerance
/// `rtol`, recording the state at every grid time.
pub fn evolve_direct(h: &ComplexMatrix, initial: &StateVector, times: &[f64], rtol: f64) -> Result<EvolutionResult> {
    if initial.basis() != h.basis() {
        return Err(Error::DimensionMismatch("initial state and Hamiltonian bases differ".into()));
    }
    check_times(times)?;
    let top = initial.top_mass_fraction(32.min(initial.basis().cells()));
    if initial.basis().cells() > 32 && top > INITIAL_TOP_MASS {
        return Err(Error::CutoffBreach { t: times[0], mass: top });
    }
    let mut prop = Propagator::new(h.as_matrix(), Tolerances { rtol, atol: DEFAULT_ATOL });
    let mut y: Vec<Complex64> = initial.amplitudes().iter().copied().collect();
    let mut watch = BreachWatch { basis: initial.basis() };
    let mut states = Vec::with_capacity(times.len());
    states.push(initial.clone());
    for w in times.windows(2) {
        prop.advance(&mut y, w[0], w[1], &mut watch)?;
        states.push(StateVector::from_amplitudes(initial.basis(), DVector::from_column_slice(&y))?);
    }
    Ok(EvolutionResult::from_states(times.to_vec(), states))
}

/// No-jump probability ‖Ψ(t)‖² e^{−2(J3²/γ)t} for a result evolved without
/// the uniform decay constant.
pub fn survival_probability(params: &ModelParams, result: &EvolutionResult) -> Vec<f64> {
    let g = params.dissipative_strength();
    result
        .times
        .iter()
        .zip(&result.norms)
        .map(|(t, n)| n * n * (-2.0 * g * t).exp())
        .collect()
}

/// Cell distribution of the normalized state.
pub fn normalized_distribution(state: &StateVector) -> Result<Vec<f64>> {
    cell_distribution(state)
}

/// Tolerance on the reconstruction of a single-site initial state.
pub const EXPANSION_TAIL_TOL: f64 = 1e-8;

/// Analytic evolution of |level, cell⟩, growing the mode budget until the
/// initial state is reconstructed to [`EXPANSION_TAIL_TOL`]. Survival
/// probabilities are attached.
pub fn evolve_site(params: &ModelParams, level: Level, cell: usize, times: &[f64]) -> Result<(EigenSet, EvolutionResult)> {
    let mut n_modes = 2 * cell + 40;
    loop {
        let eig = analytic_eigenset(params, n_modes)?;
        let initial = eig.basis_state(level, cell)?;
        match expand(&initial, &eig, EXPANSION_TAIL_TOL) {
            Ok(coeffs) => {
                let mut result = evolve_analytic(&coeffs, &eig, times)?;
                result.survival = Some(survival_probability(params, &result));
                return Ok((eig, result));
            }
            Err(Error::ModeBudgetExceeded { .. }) if n_modes < 2048 => n_modes *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Largest componentwise |Ψ_analytic(t) − Ψ_direct(t)| over `times` for the
/// evolution of |level, cell⟩, the direct run using tolerance `rtol`.
pub fn cross_validate(params: &ModelParams, level: Level, cell: usize, times: &[f64], rtol: f64) -> Result<f64> {
    let (eig, analytic) = evolve_site(params, level, cell, times)?;
    let h = build_h_eff(params, &eig.basis, false)?;
    let direct = evolve_direct(&h, &eig.basis_state(level, cell)?, times, rtol)?;
    let mut worst: f64 = 0.0;
    for (a, d) in analytic.states.iter().zip(&direct.states) {
        for (x, y) in a.amplitudes().iter().zip(d.amplitudes().iter()) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::analytic_eigenset;
    use crate::model::BasisSpec;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn grid_shape() {
        let g = time_grid(20.0, 400);
        assert_eq!(g.len(), 400);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[399], 20.0);
    }

    #[test]
    fn eigenmode_expands_to_itself() {
        let p = ModelParams::new(1.5, 1.0, 3.0, 50.0, FRAC_PI_2).unwrap();
        let eig = analytic_eigenset(&p, 12).unwrap();
        let target = eig.get(5, Branch::Plus).unwrap().right.clone();
        let c = expand(&target, &eig, 1e-10).unwrap();
        for (mode, coeff) in eig.modes.iter().zip(&c.coefficients) {
            if mode.n == 5 && mode.branch == Branch::Plus {
                assert!((coeff - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            } else {
                assert!(coeff.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn bare_jc_vacuum_is_stationary() {
        let p = ModelParams::new(0.0, 1.0, 0.0, 50.0, 0.0).unwrap();
        let eig = analytic_eigenset(&p, 4).unwrap();
        let init = eig.basis_state(Level::G, 0).unwrap();
        let c = expand(&init, &eig, 1e-12).unwrap();
        assert_eq!(c.coefficients[0], Complex64::new(1.0, 0.0));
        assert_eq!(c.get(&eig, 0, Branch::Zero), Some(Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn insufficient_modes_reported() {
        let p = ModelParams::new(1.5, 1.0, 0.0, 50.0, 0.0).unwrap();
        let eig = analytic_eigenset(&p, 5).unwrap();
        let init = eig.basis_state(Level::G, 30).unwrap();
        assert!(matches!(expand(&init, &eig, 1e-8), Err(Error::ModeBudgetExceeded { .. })));
    }

    #[test]
    fn single_mode_evolves_by_phase() {
        let p = ModelParams::new(0.6, 1.0, 3.0, 50.0, FRAC_PI_2).unwrap();
        let eig = analytic_eigenset(&p, 6).unwrap();
        let mode = eig.get(3, Branch::Plus).unwrap();
        let c = expand(&mode.right, &eig, 1e-10).unwrap();
        let res = evolve_analytic(&c, &eig, &[0.0, 1.3, 7.0]).unwrap();
        for (t, s) in res.times.iter().zip(&res.states) {
            let expect = mode.right.scaled(Complex64::from_polar(1.0, -2.0 * t));
            assert!(s.distance(&expect) < 1e-10);
        }
        assert!(res.norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn initial_state_reproduced_at_t0() {
        let p = ModelParams::new(0.6, 1.0, 3.0, 50.0, -FRAC_PI_2).unwrap();
        let (eig, res) = evolve_site(&p, Level::G, 10, &time_grid(5.0, 11)).unwrap();
        let init = eig.basis_state(Level::G, 10).unwrap();
        assert!(res.states[0].distance(&init) < 1e-8);
        let s = res.survival.unwrap();
        assert!((s[0] - res.norms[0].powi(2)).abs() < 1e-15);
    }

    #[test]
    fn hermitian_norm_conserved_by_both_routes() {
        let p = ModelParams::new(1.5, 1.0, 0.0, 50.0, 0.0).unwrap();
        let times = time_grid(10.0, 21);
        let (eig, res) = evolve_site(&p, Level::G, 10, &times).unwrap();
        assert!(res.norms.iter().all(|n| (n - 1.0).abs() < 1e-8));
        let h = build_h_eff(&p, &eig.basis, false).unwrap();
        let direct = evolve_direct(&h, &eig.basis_state(Level::G, 10).unwrap(), &times, 1e-10).unwrap();
        assert!(direct.norms.iter().all(|n| (n - 1.0).abs() < 1e-8));
        assert!(survival_probability(&p, &res).iter().all(|s| (s - 1.0).abs() < 1e-8));
    }

    #[test]
    fn scalar_f_decay() {
        let basis = BasisSpec::full(3);
        let mut m = ComplexMatrix::zeros(&basis).into_matrix();
        let f = basis.index(Level::F, 0).unwrap();
        m[(f, f)] = Complex64::new(0.0, -2.0);
        let h = ComplexMatrix::from_matrix(&basis, m).unwrap();
        let init = StateVector::basis_state(&basis, Level::F, 0).unwrap();
        let res = evolve_direct(&h, &init, &[0.0, 0.5, 1.0], 1e-10).unwrap();
        for (t, n) in res.times.iter().zip(&res.norms) {
            assert!((n - (-2.0 * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn cutoff_breach_detected() {
        let p = ModelParams::new(1.5, 1.0, 0.0, 50.0, 0.0).unwrap();
        let small = BasisSpec::effective(12);
        let h = build_h_eff(&p, &small, false).unwrap();
        let init = StateVector::basis_state(&small, Level::G, 5).unwrap();
        let err = evolve_direct(&h, &init, &time_grid(20.0, 5), 1e-9).unwrap_err();
        assert!(matches!(err, Error::CutoffBreach { .. }), "{err}");
        let basis = BasisSpec::effective(40);
        let h = build_h_eff(&p, &basis, false).unwrap();
        let high = StateVector::basis_state(&basis, Level::G, 39).unwrap();
        assert!(matches!(evolve_direct(&h, &high, &[0.0, 1.0], 1e-9), Err(Error::CutoffBreach { .. })));
    }

    #[test]
    fn distribution_examples() {
        let basis = BasisSpec::effective(9);
        let s = StateVector::basis_state(&basis, Level::G, 7).unwrap();
        let d = normalized_distribution(&s).unwrap();
        assert_eq!(d[7], 1.0);
        assert_eq!(d.iter().sum::<f64>(), 1.0);
        let s = StateVector::basis_state(&basis, Level::G, 3).unwrap().scaled(Complex64::new(2.0, 0.0));
        assert_eq!(normalized_distribution(&s).unwrap()[3], 1.0);
        let mut mixed = StateVector::basis_state(&basis, Level::G, 0).unwrap();
        mixed.set_amplitude(Level::E, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((normalized_distribution(&mixed).unwrap()[0] - 1.0).abs() < 1e-15);
        assert_eq!(normalized_distribution(&StateVector::zeros(&basis)), Err(Error::ZeroState));
    }
}
