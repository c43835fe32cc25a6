//! Parameters, truncated lattice bases and the Hamiltonian builders.
//!
//! Two Hamiltonians live here: the full three-level model (levels g, e and
//! the decaying auxiliary level f) and the two-level effective model obtained
//! after eliminating f. Both are represented densely on a truncated Fock
//! lattice, with basis states ordered level-major (all g cells, then all e
//! cells, then all f cells).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Physical couplings of the driven three-level ion. Energies are in units
/// where ħ = 1; every preset in this crate uses `j2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub gamma: f64,
    pub phi: f64,
}

impl ModelParams {
    pub fn new(j1: f64, j2: f64, j3: f64, gamma: f64, phi: f64) -> Result<Self> {
        let p = Self { j1, j2, j3, gamma, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.j1, self.j2, self.j3, self.gamma, self.phi];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all couplings must be finite".into()));
        }
        if self.j2 <= 0.0 {
            return Err(Error::InvalidParams(format!("J2 must be > 0, got {}", self.j2)));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.j3 < 0.0 {
            return Err(Error::InvalidParams(format!("J3 must be >= 0, got {}", self.j3)));
        }
        Ok(())
    }

    /// Non-reciprocity strength J3²/γ.
    pub fn dissipative_strength(&self) -> f64 {
        self.j3 * self.j3 / self.gamma
    }

    pub fn with_phi(self, phi: f64) -> Self {
        Self { phi, ..self }
    }

    pub fn with_j3(self, j3: f64) -> Self {
        Self { j3, ..self }
    }

    pub fn with_j1(self, j1: f64) -> Self {
        Self { j1, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

/// Intracell hoppings and the displacement amplitudes of the similarity
/// transformation.
///
/// `alpha2` is the g→e amplitude ⟨e,n|H|g,n⟩ and `alpha1` the e→g amplitude
/// ⟨g,n|H|e,n⟩. Note that `alpha2(φ) = alpha1(−φ)`; the two are complex
/// conjugates only when J3 = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCouplings {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta1: Complex64,
    pub beta2: Complex64,
    pub g: f64,
}

pub fn derive_couplings(params: &ModelParams) -> DerivedCouplings {
    let g = params.dissipative_strength();
    let j1 = Complex64::new(params.j1, 0.0);
    let alpha1 = j1 - I * g * Complex64::from_polar(1.0, params.phi);
    let alpha2 = j1 - I * g * Complex64::from_polar(1.0, -params.phi);
    DerivedCouplings {
        alpha1,
        alpha2,
        beta1: -alpha1 / params.j2,
        beta2: -alpha2 / params.j2,
        g,
    }
}

/// Internal electronic level of the ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    G,
    E,
    F,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::G => "g",
            Level::E => "e",
            Level::F => "f",
        };
        f.write_str(s)
    }
}

/// Truncated product basis `levels ⊗ {|0⟩..|n_max⟩}` in level-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    n_max: usize,
    levels: Vec<Level>,
}

impl BasisSpec {
    /// Two-level lattice {g, e} used by the effective model.
    pub fn effective(n_max: usize) -> Self {
        Self { n_max, levels: vec![Level::G, Level::E] }
    }

    /// Three-level lattice {g, e, f} used by the full model.
    pub fn full(n_max: usize) -> Self {
        Self { n_max, levels: vec![Level::G, Level::E, Level::F] }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn cells(&self) -> usize {
        self.n_max + 1
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn has_level(&self, level: Level) -> bool {
        self.levels.contains(&level)
    }

    pub fn dim(&self) -> usize {
        self.levels.len() * self.cells()
    }

    pub fn index(&self, level: Level, n: usize) -> Option<usize> {
        if n > self.n_max {
            return None;
        }
        let pos = self.levels.iter().position(|&l| l == level)?;
        Some(pos * self.cells() + n)
    }

    pub fn label(&self, index: usize) -> (Level, usize) {
        (self.levels[index / self.cells()], index % self.cells())
    }

    /// Basis labels in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Level, usize)> + '_ {
        self.levels
            .iter()
            .flat_map(move |&l| (0..=self.n_max).map(move |n| (l, n)))
    }
}

/// Dense square operator on a [`BasisSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    basis: BasisSpec,
    data: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(basis: &BasisSpec) -> Self {
        let d = basis.dim();
        Self { basis: basis.clone(), data: DMatrix::zeros(d, d) }
    }

    pub fn from_matrix(basis: &BasisSpec, data: DMatrix<Complex64>) -> Result<Self> {
        let d = basis.dim();
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, basis dimension is {d}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { basis: basis.clone(), data })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    /// Matrix element ⟨row|H|col⟩; zero for labels outside the basis.
    pub fn element(&self, row: (Level, usize), col: (Level, usize)) -> Complex64 {
        match (self.basis.index(row.0, row.1), self.basis.index(col.0, col.1)) {
            (Some(r), Some(c)) => self.data[(r, c)],
            _ => ZERO,
        }
    }

    fn add(&mut self, row: (Level, usize), col: (Level, usize), value: Complex64) {
        if let (Some(r), Some(c)) = (self.basis.index(row.0, row.1), self.basis.index(col.0, col.1)) {
            self.data[(r, c)] += value;
        }
    }

    pub fn dagger(&self) -> Self {
        Self { basis: self.basis.clone(), data: self.data.adjoint() }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.basis != self.basis {
            return Err(Error::DimensionMismatch("state and operator bases differ".into()));
        }
        Ok(StateVector { basis: self.basis.clone(), amps: &self.data * &state.amps })
    }

    /// Largest absolute element.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Dense amplitude vector on a [`BasisSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: BasisSpec,
    amps: DVector<Complex64>,
}

impl StateVector {
    pub fn zeros(basis: &BasisSpec) -> Self {
        Self { basis: basis.clone(), amps: DVector::zeros(basis.dim()) }
    }

    pub fn from_amplitudes(basis: &BasisSpec, amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for basis dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis: basis.clone(), amps })
    }

    /// The lattice site |level, n⟩.
    pub fn basis_state(basis: &BasisSpec, level: Level, n: usize) -> Result<Self> {
        let idx = basis.index(level, n).ok_or_else(|| {
            Error::DimensionMismatch(format!("|{level},{n}⟩ is outside the basis (n_max = {})", basis.n_max()))
        })?;
        let mut s = Self::zeros(basis);
        s.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<Complex64> {
        &mut self.amps
    }

    pub fn amplitude(&self, level: Level, n: usize) -> Complex64 {
        self.basis.index(level, n).map_or(ZERO, |i| self.amps[i])
    }

    pub fn set_amplitude(&mut self, level: Level, n: usize, value: Complex64) -> Result<()> {
        let idx = self
            .basis
            .index(level, n)
            .ok_or_else(|| Error::DimensionMismatch(format!("|{level},{n}⟩ is outside the basis")))?;
        self.amps[idx] = value;
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { basis: self.basis.clone(), amps: &self.amps * factor }
    }

    /// ⟨self|other⟩, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// Euclidean distance ‖self − other‖; the bases must agree.
    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.amps - &other.amps).norm()
    }

    /// Copy onto another basis with the same levels, padding or dropping cells.
    pub fn embed(&self, basis: &BasisSpec) -> Self {
        let mut out = Self::zeros(basis);
        for (i, (level, n)) in self.basis.iter().enumerate() {
            if let Some(j) = basis.index(level, n) {
                out.amps[j] = self.amps[i];
            }
        }
        out
    }

    /// Probability mass on the topmost `cells` cells, relative to the total.
    pub fn top_mass_fraction(&self, cells: usize) -> f64 {
        let total = self.norm_squared();
        if total == 0.0 {
            return 0.0;
        }
        let lo = self.basis.cells().saturating_sub(cells);
        let top: f64 = self
            .basis
            .iter()
            .zip(self.amps.iter())
            .filter(|((_, n), _)| *n >= lo)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        top / total
    }
}

/// Truncated bosonic annihilation operator on `n_max + 1` Fock states.
pub fn fock_annihilation(n_max: usize) -> DMatrix<Complex64> {
    let d = n_max + 1;
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `(a, a†)` acting on the Fock index of every internal level.
pub fn ladder_ops(basis: &BasisSpec) -> (ComplexMatrix, ComplexMatrix) {
    let mut a = ComplexMatrix::zeros(basis);
    for &level in basis.levels() {
        for n in 1..=basis.n_max() {
            a.add((level, n - 1), (level, n), Complex64::new((n as f64).sqrt(), 0.0));
        }
    }
    let a_dag = a.dagger();
    (a, a_dag)
}

/// The full no-jump Hamiltonian with the auxiliary level f.
pub fn build_h_full(params: &ModelParams, basis: &BasisSpec) -> Result<ComplexMatrix> {
    if !basis.has_level(Level::F) {
        return Err(Error::DimensionMismatch("full Hamiltonian needs a basis containing level f".into()));
    }
    let mut h = ComplexMatrix::zeros(basis);
    let j1 = Complex64::new(params.j1, 0.0);
    let j3 = Complex64::new(params.j3, 0.0);
    let j3_phase = params.j3 * Complex64::from_polar(1.0, -params.phi);
    for n in 0..=basis.n_max() {
        h.add((Level::E, n), (Level::G, n), j1);
        h.add((Level::G, n), (Level::E, n), j1);
        if n >= 1 {
            let c = Complex64::new(params.j2 * (n as f64).sqrt(), 0.0);
            // J2 a |e⟩⟨g| and its conjugate
            h.add((Level::E, n - 1), (Level::G, n), c);
            h.add((Level::G, n), (Level::E, n - 1), c);
        }
        h.add((Level::E, n), (Level::F, n), j3_phase);
        h.add((Level::F, n), (Level::E, n), j3_phase.conj());
        h.add((Level::G, n), (Level::F, n), j3);
        h.add((Level::F, n), (Level::G, n), j3);
        h.add((Level::F, n), (Level::F, n), Complex64::new(0.0, -params.gamma));
    }
    Ok(h)
}

/// The effective two-level lattice Hamiltonian.
///
/// With `include_constant` the uniform decay term −i(J3²/γ) is added to the
/// diagonal; it only rescales the norm and is needed for no-jump
/// probabilities.
pub fn build_h_eff(params: &ModelParams, basis: &BasisSpec, include_constant: bool) -> Result<ComplexMatrix> {
    if basis.has_level(Level::F) || !basis.has_level(Level::G) || !basis.has_level(Level::E) {
        return Err(Error::DimensionMismatch("effective Hamiltonian needs the {g, e} basis".into()));
    }
    let c = derive_couplings(params);
    let mut h = ComplexMatrix::zeros(basis);
    for n in 0..=basis.n_max() {
        h.add((Level::E, n), (Level::G, n), c.alpha2);
        h.add((Level::G, n), (Level::E, n), c.alpha1);
        if n < basis.n_max() {
            let hop = Complex64::new(params.j2 * ((n + 1) as f64).sqrt(), 0.0);
            h.add((Level::E, n), (Level::G, n + 1), hop);
            h.add((Level::G, n + 1), (Level::E, n), hop);
        }
        if include_constant {
            let decay = Complex64::new(0.0, -c.g);
            h.add((Level::G, n), (Level::G, n), decay);
            h.add((Level::E, n), (Level::E, n), decay);
        }
    }
    Ok(h)
}

/// Jaynes–Cummings Hamiltonian J2(a†σ₋ + aσ₊) on the {g, e} lattice.
pub fn build_h_jc(j2: f64, basis: &BasisSpec) -> Result<ComplexMatrix> {
    let p = ModelParams { j1: 0.0, j2, j3: 0.0, gamma: 1.0, phi: 0.0 };
    build_h_eff(&p, basis, false)
}

/// Σz = diag(+1 on e sites, −1 on g sites).
pub fn sigma_z(basis: &BasisSpec) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(basis);
    for (i, (level, _)) in basis.iter().enumerate() {
        let v = match level {
            Level::E => 1.0,
            Level::G => -1.0,
            Level::F => 0.0,
        };
        s.data[(i, i)] = Complex64::new(v, 0.0);
    }
    s
}

/// Eliminates the f block of the full Hamiltonian by a zero-energy Schur
/// complement, H_ge − V H_ff⁻¹ V†, returned on the {g, e} basis.
pub fn schur_eliminated(params: &ModelParams, n_max: usize) -> Result<ComplexMatrix> {
    let full_basis = BasisSpec::full(n_max);
    let eff_basis = BasisSpec::effective(n_max);
    let h = build_h_full(params, &full_basis)?;
    let d = eff_basis.dim();
    let nf = full_basis.dim() - d;
    // level-major ordering puts the f block last
    let m = h.as_matrix();
    let h_ge = m.view((0, 0), (d, d));
    let v = m.view((0, d), (d, nf));
    let v_back = m.view((d, 0), (nf, d));
    let h_ff = m.view((d, d), (nf, nf)).clone_owned();
    let inv = h_ff
        .try_inverse()
        .ok_or_else(|| Error::InvalidParams("f block is singular".into()))?;
    let elim = h_ge - v * inv * v_back;
    ComplexMatrix::from_matrix(&eff_basis, elim)
}

/// Restriction of a full-model state to the {g, e} sector.
pub fn project_ge(state: &StateVector) -> StateVector {
    state.embed(&BasisSpec::effective(state.basis().n_max()))
}

/// Largest sector distance, over an evenly spaced grid on `[0, t_end]`,
/// between the full-model conditional state projected on {g, e} and the
/// effective-model state evolved with its constant decay term.
pub fn adiabatic_elimination_error(
    params: &ModelParams,
    initial: &StateVector,
    t_end: f64,
    t_steps: usize,
) -> Result<f64> {
    let eff_basis = initial.basis().clone();
    if eff_basis.has_level(Level::F) {
        return Err(Error::DimensionMismatch("initial state must live on the {g, e} basis".into()));
    }
    let full_basis = BasisSpec::full(eff_basis.n_max());
    let times = crate::dynamics::time_grid(t_end, t_steps);
    let rtol = 1e-10;

    let h_full = build_h_full(params, &full_basis)?;
    let full = crate::dynamics::evolve_direct(&h_full, &initial.embed(&full_basis), &times, rtol)?;

    let h_eff = build_h_eff(params, &eff_basis, true)?;
    let eff = crate::dynamics::evolve_direct(&h_eff, initial, &times, rtol)?;

    Ok(full
        .states
        .iter()
        .zip(&eff.states)
        .map(|(f, e)| project_ge(f).distance(e))
        .fold(0.0, f64::max))
}
