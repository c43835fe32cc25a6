//! Finite non-reciprocal SSH chain with uniform intercell hopping, the
//! reference against which the Fock-lattice results are compared.
//!
//! When both intracell hoppings are real with α1·α2 > 0, the diagonal
//! imaginary-gauge transformation D = diag(s^{−⌈k/2⌉}), s = √(α2/α1), k the
//! site position along the chain, maps the chain onto a real symmetric
//! tridiagonal matrix with intracell hopping √(α1α2). The intercell bonds are
//! already symmetric, so the scaling advances once per cell. Right
//! eigenvectors of the original chain follow as D⁻¹w.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{derive_couplings, BasisSpec, ComplexMatrix, Level, ModelParams, StateVector};
use crate::observables::{ipr, mean_position};

/// |E| below this (in units of J2) counts as a zero mode.
pub const ZERO_MODE_TOL: f64 = 1e-6;
const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParams {
    pub model: ModelParams,
    pub cells: usize,
}

impl UniformParams {
    pub fn new(model: ModelParams, cells: usize) -> Result<Self> {
        model.validate()?;
        if cells == 0 {
            return Err(Error::InvalidParams("uniform chain needs at least one cell".into()));
        }
        Ok(Self { model, cells })
    }

    pub fn basis(&self) -> BasisSpec {
        BasisSpec::effective(self.cells - 1)
    }
}

/// Chain position of a lattice site: g_n ↦ 2n, e_n ↦ 2n + 1.
fn chain_index(level: Level, n: usize) -> usize {
    match level {
        Level::G => 2 * n,
        _ => 2 * n + 1,
    }
}

/// Exponent ⌈k/2⌉ of the gauge factor at chain position k.
fn gauge_power(k: usize) -> i32 {
    k.div_ceil(2) as i32
}

pub fn build_uniform_h(p: &UniformParams) -> ComplexMatrix {
    let basis = p.basis();
    let c = derive_couplings(&p.model);
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    let idx = |l, n| basis.index(l, n).expect("site in basis");
    let hop = Complex64::new(p.model.j2, 0.0);
    for n in 0..p.cells {
        m[(idx(Level::E, n), idx(Level::G, n))] = c.alpha2;
        m[(idx(Level::G, n), idx(Level::E, n))] = c.alpha1;
        if n + 1 < p.cells {
            m[(idx(Level::E, n), idx(Level::G, n + 1))] = hop;
            m[(idx(Level::G, n + 1), idx(Level::E, n))] = hop;
        }
    }
    ComplexMatrix::from_matrix(&basis, m).expect("dimension fixed by basis")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReduction {
    pub t_intra: f64,
    pub t_inter: f64,
    /// s = √(α2/α1); zero at the exceptional point α2 = 0.
    pub scale_ratio: f64,
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > REAL_TOL * z.norm().max(1.0) {
        return Err(Error::GaugeReductionInvalid(format!("{what} = {z} is not real")));
    }
    Ok(z.re)
}

impl GaugeReduction {
    /// Requires real intracell hoppings with α1·α2 ≥ 0; the boundary case
    /// α1·α2 = 0 is the exceptional point.
    pub fn new(p: &UniformParams) -> Result<Self> {
        let c = derive_couplings(&p.model);
        let a1 = real_part(c.alpha1, "alpha1")?;
        let a2 = real_part(c.alpha2, "alpha2")?;
        let product = a1 * a2;
        if product < 0.0 || a1 == 0.0 && a2 != 0.0 {
            return Err(Error::GaugeReductionInvalid(format!(
                "alpha1 * alpha2 = {product:.6} is negative (non-reciprocity exceeds the intracell coupling)"
            )));
        }
        let scale_ratio = if a1 == 0.0 { 1.0 } else { (a2 / a1).sqrt() };
        let t_intra = a1.signum() * product.sqrt();
        let sites = 2 * p.cells;
        let off_diagonal = (0..sites - 1)
            .map(|k| if k % 2 == 0 { t_intra } else { p.model.j2 })
            .collect();
        Ok(Self { t_intra, t_inter: p.model.j2, scale_ratio, diagonal: vec![0.0; sites], off_diagonal })
    }

    pub fn is_exceptional(&self) -> bool {
        self.t_intra == 0.0 && self.scale_ratio == 0.0
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.diagonal.len();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.diagonal[k];
        }
        for (k, &t) in self.off_diagonal.iter().enumerate() {
            m[(k, k + 1)] = t;
            m[(k + 1, k)] = t;
        }
        m
    }

    /// max |D·H·D⁻¹ − H_reduced|, with (D·H·D⁻¹)_ij = s^{⌈k_j/2⌉ − ⌈k_i/2⌉} H_ij.
    pub fn similarity_defect(&self, h: &ComplexMatrix) -> f64 {
        let basis = h.basis();
        let reduced = self.dense();
        let mut worst: f64 = 0.0;
        for (i, (li, ni)) in basis.iter().enumerate() {
            for (j, (lj, nj)) in basis.iter().enumerate() {
                let (ki, kj) = (chain_index(li, ni), chain_index(lj, nj));
                let hij = h.as_matrix()[(i, j)];
                let scaled = if hij == Complex64::new(0.0, 0.0) {
                    hij
                } else {
                    hij * self.scale_ratio.powi(gauge_power(kj) - gauge_power(ki))
                };
                worst = worst.max((scaled - Complex64::new(reduced[(ki, kj)], 0.0)).norm());
            }
        }
        worst
    }
}

/// Effective intracell coupling √(α1α2) of the reduced chain; vanishes at the
/// exceptional point g = J1 (φ = ±π/2).
pub fn effective_intracell_coupling(model: &ModelParams) -> Result<f64> {
    let p = UniformParams { model: *model, cells: 1 };
    Ok(GaugeReduction::new(&p)?.t_intra.abs())
}

/// Spectrum of the uniform chain, ascending; defined at the exceptional point.
pub fn uniform_energies(p: &UniformParams) -> Result<Vec<f64>> {
    let red = GaugeReduction::new(p)?;
    let mut e: Vec<f64> = SymmetricEigen::new(red.dense()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformMode {
    pub energy: f64,
    pub right: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformEigenSet {
    pub params: UniformParams,
    pub reduction: GaugeReduction,
    pub modes: Vec<UniformMode>,
}

/// Edge pair (a, b, σ) of the reduced chain: a lives on g-sites, b on
/// e-sites, with H·a = σ·b and H·b = σ·a, σ ≥ 0. Starts from the geometric
/// profiles decaying from either end, which are exact to rounding when the
/// splitting is unresolvable, and otherwise refines them by inverse
/// iteration with the lower-bidiagonal block T (T_nn = t_intra,
/// T_n,n−1 = t_inter) that maps e-site amplitudes onto g-sites.
fn edge_pair(red: &GaugeReduction, cells: usize) -> (DVector<f64>, DVector<f64>, f64) {
    let (t, j) = (red.t_intra, red.t_inter);
    let r = -t / j;
    let mut a = DVector::from_fn(cells, |n, _| r.powi(n as i32)).normalize();
    let mut b = DVector::from_fn(cells, |n, _| r.powi((cells - 1 - n) as i32)).normalize();
    let mut sigma = a.dot(&DVector::from_fn(cells, |n, _| t * b[n] + if n > 0 { j * b[n - 1] } else { 0.0 }));
    if sigma.abs() >= 1e-14 * j {
        // T·b would cancel down to σ, so a is taken from a = σ T⁻ᵀ b instead
        let back = |b: &DVector<f64>| {
            let mut y = DVector::<f64>::zeros(cells);
            for n in (0..cells).rev() {
                let next = if n + 1 < cells { y[n + 1] } else { 0.0 };
                y[n] = (b[n] - j * next) / t;
            }
            y
        };
        for _ in 0..3 {
            let y = back(&b);
            let mut x = DVector::<f64>::zeros(cells);
            for n in 0..cells {
                let prev = if n > 0 { x[n - 1] } else { 0.0 };
                x[n] = (y[n] - j * prev) / t;
            }
            b = x.normalize();
        }
        let y = back(&b);
        sigma = 1.0 / y.norm();
        a = y * sigma;
    } else if sigma < 0.0 {
        sigma = -sigma;
        a = -a;
    }
    let mut wa = DVector::zeros(2 * cells);
    let mut wb = DVector::zeros(2 * cells);
    for n in 0..cells {
        wa[2 * n] = a[n];
        wb[2 * n + 1] = b[n];
    }
    (wa, wb, sigma)
}

pub fn solve_uniform(p: &UniformParams) -> Result<UniformEigenSet> {
    let red = GaugeReduction::new(p)?;
    if red.scale_ratio == 0.0 || red.t_intra == 0.0 {
        return Err(Error::GaugeReductionInvalid(
            "alpha1 * alpha2 = 0: exceptional point, eigenvectors coalesce".into(),
        ));
    }
    let eig = SymmetricEigen::new(red.dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors: Vec<DVector<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();

    // The two topological edge modes are split only by ~(t_intra/J2)^N,
    // often below the solver's resolution, in which case it returns an
    // arbitrary mix that the gauge map turns into noise on one end. The pair
    // is rebuilt from the smallest singular pair of the intercell block.
    let zero: Vec<usize> = (0..energies.len())
        .filter(|&i| energies[i].abs() < ZERO_MODE_TOL * p.model.j2)
        .collect();
    if zero.len() == 2 && red.t_intra.abs() < red.t_inter {
        let (wa, wb, sigma) = edge_pair(&red, p.cells);
        let (lo, hi) = (zero[0], zero[1]);
        let hermitian = (red.scale_ratio - 1.0).abs() < REAL_TOL;
        if hermitian && sigma < 1e-12 * p.model.j2 {
            energies[lo] = 0.0;
            energies[hi] = 0.0;
            vectors[lo] = wa;
            vectors[hi] = wb;
        } else {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            energies[lo] = -sigma;
            energies[hi] = sigma;
            vectors[lo] = (&wa - &wb) * h;
            vectors[hi] = (&wa + &wb) * h;
        }
    }

    let basis = p.basis();
    let modes = energies
        .into_iter()
        .zip(vectors)
        .map(|(energy, w)| {
            let mut amps = DVector::<Complex64>::zeros(basis.dim());
            for (i, (l, n)) in basis.iter().enumerate() {
                let k = chain_index(l, n);
                amps[i] = Complex64::new(w[k] * red.scale_ratio.powi(gauge_power(k)), 0.0);
            }
            let right = fix_sign(StateVector::from_amplitudes(&basis, amps)?.normalized()?);
            Ok(UniformMode { energy, right })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniformEigenSet { params: *p, reduction: red, modes })
}

/// First significant component (in chain order) made real positive.
fn fix_sign(v: StateVector) -> StateVector {
    let basis = v.basis().clone();
    let big = v.amplitudes().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut sites: Vec<(usize, usize)> = basis.iter().enumerate().map(|(i, (l, n))| (chain_index(l, n), i)).collect();
    sites.sort_unstable();
    for (_, i) in sites {
        let z = v.amplitudes()[i];
        if z.norm() > 1e-12 * big {
            let phase = z.conj() / z.norm();
            return v.scaled(phase);
        }
    }
    v
}

/// (energy, mean cell, IPR) of every mode's normalized right eigenvector.
pub fn skin_profile(eig: &UniformEigenSet) -> Result<Vec<(f64, f64, f64)>> {
    eig.modes
        .iter()
        .map(|m| Ok((m.energy, mean_position(&m.right)?, ipr(&m.right)?)))
        .collect()
}

/// Largest relative residual ‖Hv − Ev‖/‖v‖ over all modes.
pub fn max_residual(eig: &UniformEigenSet) -> f64 {
    let h = build_uniform_h(&eig.params);
    eig.modes
        .iter()
        .map(|m| {
            let hv = h.as_matrix() * m.right.amplitudes();
            (hv - m.right.amplitudes() * Complex64::new(m.energy, 0.0)).norm() / m.right.norm()
        })
        .fold(0.0, f64::max)
}
