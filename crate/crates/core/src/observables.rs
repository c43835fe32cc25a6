//! Scalar diagnostics on lattice states. Every function normalizes its input,
//! since conditional non-Hermitian states arrive unnormalized.

use crate::eigen::{Branch, EigenSet};
use crate::error::{Error, Result};
use crate::model::StateVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeObservables {
    pub energy: f64,
    pub mean_n: f64,
    pub ipr: f64,
    pub cell_distribution: Vec<f64>,
}

impl ModeObservables {
    pub fn of(energy: f64, state: &StateVector) -> Result<Self> {
        let cell_distribution = cell_distribution(state)?;
        Ok(Self {
            energy,
            mean_n: mean_of(&cell_distribution),
            ipr: ipr(state)?,
            cell_distribution,
        })
    }
}

fn total_weight(state: &StateVector) -> Result<f64> {
    let w = state.norm_squared();
    if w == 0.0 || !w.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok(w)
}

/// Σ_sites |ψ|⁴ of the unit-normalized state.
pub fn ipr(state: &StateVector) -> Result<f64> {
    let w = total_weight(state)?;
    Ok(state.amplitudes().iter().map(|z| (z.norm_sqr() / w).powi(2)).sum())
}

/// P(n) = (|a_{g,n}|² + |b_{e,n}|² [+ |c_{f,n}|²]) / ‖ψ‖².
pub fn cell_distribution(state: &StateVector) -> Result<Vec<f64>> {
    let w = total_weight(state)?;
    let mut p = vec![0.0; state.basis().cells()];
    for ((_, n), z) in state.basis().iter().zip(state.amplitudes().iter()) {
        p[n] += z.norm_sqr() / w;
    }
    Ok(p)
}

fn mean_of(dist: &[f64]) -> f64 {
    dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// ⟨n̂⟩ over cells.
pub fn mean_position(state: &StateVector) -> Result<f64> {
    Ok(mean_of(&cell_distribution(state)?))
}

/// Smallest cell whose cumulative mass reaches `p`.
pub fn quantile_cell(dist: &[f64], p: f64) -> usize {
    let mut acc = 0.0;
    for (n, w) in dist.iter().enumerate() {
        acc += w;
        if acc >= p {
            return n;
        }
    }
    dist.len().saturating_sub(1)
}

/// Central interval [lo, hi] of cells holding a mass fraction `q`.
pub fn mass_interval(dist: &[f64], q: f64) -> (usize, usize) {
    let tail = (1.0 - q) / 2.0;
    (quantile_cell(dist, tail), quantile_cell(dist, 1.0 - tail))
}

/// Per-mode Δ⟨n̂⟩ = mean_n(a) − mean_n(b) of the right eigenvectors.
pub fn skin_shift(eig_a: &EigenSet, eig_b: &EigenSet) -> Result<Vec<f64>> {
    if eig_a.modes.len() != eig_b.modes.len() {
        return Err(Error::ModeMismatch(format!("{} vs {} modes", eig_a.modes.len(), eig_b.modes.len())));
    }
    eig_a
        .modes
        .iter()
        .zip(&eig_b.modes)
        .map(|(a, b)| {
            if a.n != b.n || a.branch != b.branch {
                return Err(Error::ModeMismatch(format!(
                    "mode ({}, {}) paired with ({}, {})",
                    a.n,
                    a.branch.as_str(),
                    b.n,
                    b.branch.as_str()
                )));
            }
            Ok(mean_position(&a.right)? - mean_position(&b.right)?)
        })
        .collect()
}

/// Observables of every right eigenvector, in eigenset order.
pub fn eigenset_observables(eig: &EigenSet) -> Result<Vec<(usize, Branch, ModeObservables)>> {
    eig.modes
        .iter()
        .map(|t| Ok((t.n, t.branch, ModeObservables::of(t.energy, &t.right)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BasisSpec, Level};
    use num_complex::Complex64;

    fn site(level: Level, n: usize) -> StateVector {
        StateVector::basis_state(&BasisSpec::effective(10), level, n).unwrap()
    }

    fn sum(a: &StateVector, b: &StateVector) -> StateVector {
        StateVector::from_amplitudes(a.basis(), a.amplitudes() + b.amplitudes()).unwrap()
    }

    #[test]
    fn ipr_examples() {
        assert!((ipr(&site(Level::G, 5)).unwrap() - 1.0).abs() < 1e-15);
        let pair = sum(&site(Level::G, 0), &site(Level::E, 0));
        assert!((ipr(&pair).unwrap() - 0.5).abs() < 1e-15);
        let basis = BasisSpec::effective(9);
        let flat = StateVector::from_amplitudes(
            &basis,
            nalgebra::DVector::from_element(basis.dim(), Complex64::new(0.3, 0.1)),
        )
        .unwrap();
        assert!((ipr(&flat).unwrap() - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn mean_position_examples() {
        assert!((mean_position(&site(Level::E, 7)).unwrap() - 7.0).abs() < 1e-15);
        let mid = sum(&site(Level::G, 0), &site(Level::G, 2));
        assert!((mean_position(&mid).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_state_rejected() {
        let z = StateVector::zeros(&BasisSpec::effective(3));
        assert_eq!(ipr(&z), Err(Error::ZeroState));
        assert_eq!(mean_position(&z), Err(Error::ZeroState));
        assert_eq!(cell_distribution(&z), Err(Error::ZeroState));
    }

    #[test]
    fn quantiles() {
        let dist = [0.1, 0.2, 0.4, 0.2, 0.1];
        assert_eq!(quantile_cell(&dist, 0.05), 0);
        assert_eq!(quantile_cell(&dist, 0.5), 2);
        assert_eq!(mass_interval(&dist, 0.99), (0, 4));
        assert_eq!(mass_interval(&[0.0, 0.0, 1.0, 0.0], 0.99), (2, 2));
    }
}
