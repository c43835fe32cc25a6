//! Trapped-ion feasibility arithmetic: Lamb–Dicke parameter, the number of
//! phonon cells inside the Lamb–Dicke regime, and a dynamics-backed check
//! that a proposed run stays inside that budget.

use serde::Serialize;

use crate::dynamics::evolve_site;
use crate::error::{Error, Result};
use crate::model::{Level, ModelParams};
use crate::observables::{cell_distribution, quantile_cell};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit in kg, at the precision used for the ion mass below.
pub const AMU: f64 = 1.6605e-27;
pub const CA40_MASS_AMU: f64 = 39.9626;
/// Calibrated so that η = 0.05 admits exactly 40 cells.
pub const DEFAULT_THRESHOLD: f64 = 0.2025;
pub const DEFAULT_PHONON_BUDGET: usize = 30;
/// Mass fraction defining the occupied region of a distribution.
pub const OCCUPIED_MASS: f64 = 0.999;
/// Relative slack on η²(2n+1) ≤ threshold, absorbing rounding in η².
const BOUND_SLACK: f64 = 1e-12;

/// η = k_L √(ħ / (2νM)); `nu` in rad/s, `mass` in kg, `k_l` in 1/m.
pub fn lamb_dicke(k_l: f64, nu: f64, mass: f64) -> Result<f64> {
    if !(k_l > 0.0 && nu > 0.0 && mass > 0.0) || !(k_l * nu * mass).is_finite() {
        return Err(Error::InvalidParams(format!(
            "lamb_dicke needs positive finite inputs, got k_L={k_l}, nu={nu}, M={mass}"
        )));
    }
    Ok(k_l * (HBAR / (2.0 * nu * mass)).sqrt())
}

/// Largest n with η²(2n+1) ≤ threshold; 0 when even n = 0 violates it.
pub fn max_cells(eta: f64, threshold: f64) -> Result<usize> {
    if !(eta > 0.0 && threshold > 0.0) || !eta.is_finite() || !threshold.is_finite() {
        return Err(Error::InvalidParams(format!(
            "max_cells needs positive eta and threshold, got eta={eta}, threshold={threshold}"
        )));
    }
    let ratio = threshold / (eta * eta);
    if ratio < 1.0 - BOUND_SLACK {
        return Ok(0);
    }
    let n = ((ratio * (1.0 + BOUND_SLACK) - 1.0) / 2.0).floor();
    Ok(if n >= usize::MAX as f64 { usize::MAX } else { n as usize })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IonParams {
    pub eta: f64,
    pub threshold: f64,
    pub phonon_budget: usize,
}

impl IonParams {
    pub fn new(eta: f64, threshold: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParams(format!("eta must be positive, got {eta}")));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParams(format!("threshold must lie in (0, 1), got {threshold}")));
        }
        Ok(Self { eta, threshold, phonon_budget: DEFAULT_PHONON_BUDGET })
    }

    pub fn from_trap(k_l: f64, nu: f64, mass: f64, threshold: f64) -> Result<Self> {
        Self::new(lamb_dicke(k_l, nu, mass)?, threshold)
    }

    /// ⁴⁰Ca⁺ at ν = 2π × 1 MHz driven at 729 nm.
    pub fn calcium_729() -> Result<Self> {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self::from_trap(two_pi / 729e-9, two_pi * 1e6, CA40_MASS_AMU * AMU, DEFAULT_THRESHOLD)
    }

    pub fn with_phonon_budget(self, phonon_budget: usize) -> Self {
        Self { phonon_budget, ..self }
    }

    pub fn max_cells(&self) -> usize {
        max_cells(self.eta, self.threshold).expect("validated at construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProposalReport {
    pub eta: f64,
    pub threshold: f64,
    pub max_cells: usize,
    pub phonon_budget: usize,
    pub initial_cell: usize,
    /// Largest cell, over the time grid, reached by the 99.9% mass quantile.
    pub max_occupied_cell: usize,
    pub min_survival: f64,
    pub within_max_cells: bool,
    pub within_phonon_budget: bool,
    pub feasible: bool,
}

/// Evolves |g, initial_cell⟩ over `times` and checks the occupied region
/// against the Lamb–Dicke cell budget and the phonon-measurement budget.
pub fn proposal_check(params: &ModelParams, initial_cell: usize, ion: &IonParams, times: &[f64]) -> Result<ProposalReport> {
    let (_, result) = evolve_site(params, Level::G, initial_cell, times)?;
    let mut max_occupied_cell = 0;
    for state in &result.states {
        max_occupied_cell = max_occupied_cell.max(quantile_cell(&cell_distribution(state)?, OCCUPIED_MASS));
    }
    let min_survival = result
        .survival
        .as_deref()
        .unwrap_or_default()
        .iter()
        .copied()
        .fold(1.0, f64::min);
    let max_cells = ion.max_cells();
    let within_max_cells = initial_cell <= max_cells && max_occupied_cell <= max_cells;
    let within_phonon_budget = initial_cell <= ion.phonon_budget && max_occupied_cell <= ion.phonon_budget;
    Ok(ProposalReport {
        eta: ion.eta,
        threshold: ion.threshold,
        max_cells,
        phonon_budget: ion.phonon_budget,
        initial_cell,
        max_occupied_cell,
        min_survival,
        within_max_cells,
        within_phonon_budget,
        feasible: within_max_cells && within_phonon_budget,
    })
}
