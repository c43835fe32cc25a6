//! Exact spectrum and biorthogonal eigenvectors of the effective model.
//!
//! The effective Hamiltonian is similar to the Jaynes–Cummings model through
//! the generalized displacement Ŝ = exp(μa† + νa) with μ = β2, ν = −β1. Right
//! eigenvectors are Ŝ applied to Jaynes–Cummings eigenstates and left
//! eigenvectors are (Ŝ⁻¹)† applied to the same states, so everything reduces
//! to Fock matrix elements of exp(μa† + νa).
//!
//! Those elements are
//!
//! ```text
//! ⟨m|exp(μa† + νa)|n⟩ = e^{μν/2} √(n!/m!) μ^{m−n} L_n^{(m−n)}(−μν)   (m ≥ n)
//! ```
//!
//! and the transpose with μ ↔ ν for m < n. The alternating finite sum behind
//! the Laguerre polynomial cancels catastrophically for large n, so each
//! diagonal of the matrix is generated by the normalized three-term Laguerre
//! recurrence instead, with an explicit log-scale to avoid overflow.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{build_h_eff, build_h_jc, derive_couplings, BasisSpec, ComplexMatrix, Level, ModelParams, StateVector};

/// Largest |μ|² + |ν|² accepted by [`similarity_elements`].
pub const MAX_DISPLACEMENT_SQ: f64 = 50.0;
/// Hard cap on the automatically chosen Fock cutoff.
pub const MAX_CUTOFF: usize = 4096;
/// Relative mass allowed on the last [`TAIL_CELLS`] cells of any eigenvector.
pub const TAIL_MASS_TOL: f64 = 1e-20;
pub const TAIL_CELLS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityOperator {
    pub mu: Complex64,
    pub nu: Complex64,
    pub n_max: usize,
    pub elements: DMatrix<Complex64>,
}

fn check_displacement(mu: Complex64, nu: Complex64) -> Result<()> {
    let size = mu.norm_sqr() + nu.norm_sqr();
    if size > MAX_DISPLACEMENT_SQ || !size.is_finite() {
        return Err(Error::CutoffInsufficient(format!(
            "|mu|^2 + |nu|^2 = {size:.3} exceeds {MAX_DISPLACEMENT_SQ}; the Fock representation would need an impractical cutoff"
        )));
    }
    Ok(())
}

/// ⟨m|exp(μa† + νa)|n⟩ for 0 ≤ m, n ≤ n_max.
pub fn similarity_elements(mu: Complex64, nu: Complex64, n_max: usize) -> Result<SimilarityOperator> {
    check_displacement(mu, nu)?;
    let elements = similarity_block(mu, nu, n_max + 1, n_max + 1);
    Ok(SimilarityOperator { mu, nu, n_max, elements })
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Rectangular block `rows × cols` of exp(μa† + νa).
pub(crate) fn similarity_block(mu: Complex64, nu: Complex64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(rows, cols);
    if rows == 0 || cols == 0 {
        return out;
    }
    let x = -(mu * nu);
    let prefactor = (mu * nu / 2.0).exp();
    let lnf = ln_factorials(rows.max(cols));

    // lower triangle and diagonal: m = n + d
    for d in 0..rows {
        let len = cols.min(rows - d);
        fill_diagonal(mu, x, d, len, &lnf, |n, v| out[(n + d, n)] = prefactor * v);
    }
    // strict upper triangle: n = m + d
    for d in 1..cols {
        let len = rows.min(cols - d);
        fill_diagonal(nu, x, d, len, &lnf, |m, v| out[(m, m + d)] = prefactor * v);
    }
    out
}

/// Generates z^d √(n!/(n+d)!) L_n^{(d)}(x) for n = 0..len.
fn fill_diagonal(z: Complex64, x: Complex64, d: usize, len: usize, lnf: &[f64], mut put: impl FnMut(usize, Complex64)) {
    if len == 0 {
        return;
    }
    if z == Complex64::new(0.0, 0.0) {
        let v = if d == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        // with z = 0 the argument x vanishes too and L_n^{(0)}(0) = 1
        for n in 0..len {
            put(n, v);
        }
        return;
    }
    // seed z^d / √(d!) as (unit phase) × e^{log_scale}
    let mut log_scale = d as f64 * z.norm().ln() - 0.5 * lnf[d];
    let mut prev = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::from_polar(1.0, d as f64 * z.arg());
    let df = d as f64;
    for n in 0..len {
        put(n, cur * log_scale.exp());
        if n + 1 == len {
            break;
        }
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + df - x) * cur - (nf * (nf + df)).sqrt() * prev)
            / ((nf + 1.0) * (nf + 1.0 + df)).sqrt();
        prev = cur;
        cur = next;
        let mag = cur.norm().max(prev.norm());
        if mag > 1e100 || (mag < 1e-100 && mag > 0.0) {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
}

/// Branch label of an analytic eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Zero,
    Minus,
    Plus,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Zero => "zero",
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" | "0" => Some(Branch::Zero),
            "minus" | "-" => Some(Branch::Minus),
            "plus" | "+" => Some(Branch::Plus),
            _ => None,
        }
    }

    fn sign(&self) -> f64 {
        match self {
            Branch::Zero => 0.0,
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

/// One analytic mode: energy with unit-norm right vector and the left vector
/// scaled so that ⟨left|right⟩ = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriple {
    pub n: usize,
    pub branch: Branch,
    pub energy: f64,
    pub right: StateVector,
    pub left: StateVector,
}

/// Zero mode followed by (n, −), (n, +) for n = 0..n_modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub params: ModelParams,
    pub basis: BasisSpec,
    pub n_modes: usize,
    pub modes: Vec<EigenTriple>,
}

impl EigenSet {
    pub fn get(&self, n: usize, branch: Branch) -> Option<&EigenTriple> {
        let idx = match branch {
            Branch::Zero if n == 0 => 0,
            Branch::Zero => return None,
            Branch::Minus => 1 + 2 * n,
            Branch::Plus => 2 + 2 * n,
        };
        self.modes.get(idx).filter(|t| t.n == n && t.branch == branch)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn basis_state(&self, level: Level, n: usize) -> Result<StateVector> {
        StateVector::basis_state(&self.basis, level, n)
    }
}

/// E = 0 for the zero mode, ±J2√(n+1) otherwise.
pub fn mode_energy(j2: f64, n: usize, branch: Branch) -> f64 {
    branch.sign() * j2 * ((n + 1) as f64).sqrt()
}

/// Initial cutoff before doubling: the displaced states spread over O(|β|²)
/// cells beyond the highest mode used.
pub fn initial_cutoff(params: &ModelParams, n_modes: usize) -> usize {
    let c = derive_couplings(params);
    let b = c.beta1.norm().max(c.beta2.norm());
    n_modes + (8.0 * (b + 1.0).powi(2)).ceil() as usize + 32
}

/// Exact spectrum and biorthonormal eigenvectors for `n_modes` JC doublets,
/// with the cutoff chosen automatically.
pub fn analytic_eigenset(params: &ModelParams, n_modes: usize) -> Result<EigenSet> {
    analytic_eigenset_with_cutoff(params, n_modes, None)
}

/// As [`analytic_eigenset`]; `Some(n_max)` forces the cutoff and fails if
/// the vectors do not fit.
pub fn analytic_eigenset_with_cutoff(params: &ModelParams, n_modes: usize, n_max: Option<usize>) -> Result<EigenSet> {
    params.validate()?;
    if n_modes == 0 {
        return Err(Error::InvalidParams("n_modes must be at least 1".into()));
    }
    let c = derive_couplings(params);
    let (mu_r, nu_r) = (c.beta2, -c.beta1);
    let (mu_l, nu_l) = (c.beta1.conj(), -c.beta2.conj());
    check_displacement(mu_r, nu_r)?;

    let mut cutoff = match n_max {
        Some(m) => m,
        None => initial_cutoff(params, n_modes).min(MAX_CUTOFF),
    };
    loop {
        if cutoff < n_modes {
            return Err(Error::CutoffInsufficient(format!(
                "cutoff {cutoff} cannot hold {n_modes} modes"
            )));
        }
        let basis = BasisSpec::effective(cutoff);
        let s_right = similarity_block(mu_r, nu_r, cutoff + 1, n_modes + 1);
        let s_left = similarity_block(mu_l, nu_l, cutoff + 1, n_modes + 1);
        let modes = assemble_modes(params, &basis, &s_right, &s_left, n_modes)?;
        let worst = modes
            .iter()
            .map(|t| t.right.top_mass_fraction(TAIL_CELLS).max(t.left.top_mass_fraction(TAIL_CELLS)))
            .fold(0.0, f64::max);
        if worst < TAIL_MASS_TOL {
            return Ok(EigenSet { params: *params, basis, n_modes, modes });
        }
        if n_max.is_some() || cutoff >= MAX_CUTOFF {
            return Err(Error::CutoffInsufficient(format!(
                "tail mass {worst:.3e} on the last {TAIL_CELLS} cells at n_max = {cutoff}"
            )));
        }
        cutoff = (cutoff * 2).min(MAX_CUTOFF);
    }
}

fn column_state(basis: &BasisSpec, s: &DMatrix<Complex64>, parts: &[(Level, usize, f64)]) -> StateVector {
    let mut v = StateVector::zeros(basis);
    let amps = v.amplitudes_mut();
    for &(level, col, weight) in parts {
        let offset = basis.index(level, 0).expect("level present");
        for m in 0..basis.cells() {
            amps[offset + m] += s[(m, col)] * weight;
        }
    }
    v
}

fn assemble_modes(
    params: &ModelParams,
    basis: &BasisSpec,
    s_right: &DMatrix<Complex64>,
    s_left: &DMatrix<Complex64>,
    n_modes: usize,
) -> Result<Vec<EigenTriple>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut labels = vec![(0, Branch::Zero)];
    for n in 0..n_modes {
        labels.push((n, Branch::Minus));
        labels.push((n, Branch::Plus));
    }
    labels
        .into_iter()
        .map(|(n, branch)| {
            let parts: Vec<(Level, usize, f64)> = match branch {
                Branch::Zero => vec![(Level::G, 0, 1.0)],
                _ => vec![(Level::E, n, h), (Level::G, n + 1, branch.sign() * h)],
            };
            let right = column_state(basis, s_right, &parts).normalized()?;
            let left = column_state(basis, s_left, &parts);
            let overlap = left.inner(&right);
            if overlap.norm() == 0.0 || !overlap.norm().is_finite() {
                return Err(Error::CutoffInsufficient(format!("left/right overlap vanished for mode ({n}, {})", branch.as_str())));
            }
            let left = left.scaled(Complex64::new(1.0, 0.0) / overlap.conj());
            Ok(EigenTriple { n, branch, energy: mode_energy(params.j2, n, branch), right, left })
        })
        .collect()
}

/// ‖H·right − E·right‖ / ‖right‖.
pub fn residual(trip: &EigenTriple, h: &ComplexMatrix) -> Result<f64> {
    let hv = h.apply(&trip.right)?;
    let r = hv.amplitudes() - trip.right.amplitudes() * Complex64::new(trip.energy, 0.0);
    Ok(r.norm() / trip.right.norm())
}

/// ‖H†·left − E*·left‖ / ‖left‖.
pub fn residual_left(trip: &EigenTriple, h: &ComplexMatrix) -> Result<f64> {
    let hv = h.dagger().apply(&trip.left)?;
    let r = hv.amplitudes() - trip.left.amplitudes() * Complex64::new(trip.energy, 0.0);
    Ok(r.norm() / trip.left.norm())
}

/// Largest right/left residual of every mode in `eig` against the truncated
/// effective Hamiltonian on the eigenset's own basis.
pub fn max_residual(eig: &EigenSet) -> Result<f64> {
    let h = build_h_eff(&eig.params, &eig.basis, false)?;
    let hd = h.dagger();
    let mut worst: f64 = 0.0;
    for t in &eig.modes {
        let e = Complex64::new(t.energy, 0.0);
        let r = (h.apply(&t.right)?.amplitudes() - t.right.amplitudes() * e).norm() / t.right.norm();
        let l = (hd.apply(&t.left)?.amplitudes() - t.left.amplitudes() * e).norm() / t.left.norm();
        worst = worst.max(r).max(l);
    }
    Ok(worst)
}

/// max |⟨L_i|R_j⟩ − δ_ij| over the first `count` modes.
pub fn biorthonormality_error(eig: &EigenSet, count: usize) -> f64 {
    let k = count.min(eig.modes.len());
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let g = eig.modes[i].left.inner(&eig.modes[j].right);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

fn lift(op: &DMatrix<Complex64>, basis: &BasisSpec) -> DMatrix<Complex64> {
    let cells = basis.cells();
    let d = basis.dim();
    let mut out = DMatrix::zeros(d, d);
    for blk in 0..basis.levels().len() {
        out.view_mut((blk * cells, blk * cells), (cells, cells)).copy_from(op);
    }
    out
}

/// Max-norm of Ŝ⁻¹ H_eff Ŝ − H_JC on the interior block n ≤ n_max/2.
pub fn verify_similarity(params: &ModelParams, n_max: usize) -> Result<f64> {
    if n_max < 4 {
        return Err(Error::InvalidParams("verify_similarity needs n_max >= 4".into()));
    }
    let c = derive_couplings(params);
    let basis = BasisSpec::effective(n_max);
    let s = similarity_elements(c.beta2, -c.beta1, n_max)?;
    let s_inv = similarity_elements(-c.beta2, c.beta1, n_max)?;
    let h = build_h_eff(params, &basis, false)?;
    let jc = build_h_jc(params.j2, &basis)?;
    let transformed = lift(&s_inv.elements, &basis) * h.as_matrix() * lift(&s.elements, &basis);
    let diff = transformed - jc.as_matrix();
    let interior = n_max / 2;
    let mut worst: f64 = 0.0;
    for (i, (_, ni)) in basis.iter().enumerate() {
        if ni > interior {
            continue;
        }
        for (j, (_, nj)) in basis.iter().enumerate() {
            if nj <= interior {
                worst = worst.max(diff[(i, j)].norm());
            }
        }
    }
    Ok(worst)
}

/// Amplitudes of Ŝ applied to a Fock column, exposed for diagnostics.
pub fn displaced_fock_column(mu: Complex64, nu: Complex64, n: usize, n_max: usize) -> Result<DVector<Complex64>> {
    check_displacement(mu, nu)?;
    let block = similarity_block(mu, nu, n_max + 1, n + 1);
    Ok(block.column(n).into_owned())
}
