//! Adaptive Dormand–Prince 5(4) integration of dψ/dt = −iHψ.
//!
//! The system is autonomous, so stage times never enter. The Hamiltonians
//! here are banded and mostly zero, so the dense operator is compressed to
//! CSR before stepping.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Compressed sparse row copy of a dense complex matrix.
#[derive(Debug, Clone)]
pub(crate) struct CsrMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let mut row_ptr = Vec::with_capacity(m.nrows() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    /// out = −i · H · x
    fn rhs(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = Complex64::new(acc.im, -acc.re);
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    fn inf_norm(&self) -> f64 {
        (0..self.row_ptr.len() - 1)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Outcome of one accepted step, used by callers to monitor the state.
pub(crate) trait StepObserver {
    fn accepted(&mut self, t: f64, y: &[Complex64]) -> Result<()>;
}

impl StepObserver for () {
    fn accepted(&mut self, _: f64, _: &[Complex64]) -> Result<()> {
        Ok(())
    }
}

pub(crate) struct Propagator {
    h: CsrMatrix,
    tol: Tolerances,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
    step: f64,
    fsal_valid: bool,
}

impl Propagator {
    pub fn new(h: &DMatrix<Complex64>, tol: Tolerances) -> Self {
        let n = h.nrows();
        let csr = CsrMatrix::from_dense(h);
        let radius = csr.inf_norm().max(1e-12);
        let zero = || vec![Complex64::new(0.0, 0.0); n];
        Self {
            h: csr,
            tol,
            k: [zero(), zero(), zero(), zero(), zero(), zero(), zero()],
            tmp: zero(),
            y_new: zero(),
            step: 0.1 / radius,
            fsal_valid: false,
        }
    }

    fn stage(&mut self, y: &[Complex64], h: f64, coeffs: &[(usize, f64)], target: usize) {
        for (i, t) in self.tmp.iter_mut().enumerate() {
            let mut acc = y[i];
            for &(j, a) in coeffs {
                acc += self.k[j][i] * (h * a);
            }
            *t = acc;
        }
        let (tmp, k) = (&self.tmp, &mut self.k[target]);
        self.h.rhs(tmp, k);
    }

    /// Advances `y` from `t0` to `t1` in place.
    pub fn advance(
        &mut self,
        y: &mut [Complex64],
        t0: f64,
        t1: f64,
        observer: &mut impl StepObserver,
    ) -> Result<()> {
        let mut t = t0;
        if !self.fsal_valid {
            self.h.rhs(y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        while t < t1 {
            let remaining = t1 - t;
            let last = self.step >= remaining;
            let h = if last { remaining } else { self.step };
            if h < 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::NonConvergence { t, step: h });
            }

            self.stage(y, h, &[(0, A21)], 1);
            self.stage(y, h, &[(0, A31), (1, A32)], 2);
            self.stage(y, h, &[(0, A41), (1, A42), (2, A43)], 3);
            self.stage(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4);
            self.stage(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5);
            for i in 0..y.len() {
                self.y_new[i] = y[i]
                    + (self.k[0][i] * A71
                        + self.k[2][i] * A73
                        + self.k[3][i] * A74
                        + self.k[4][i] * A75
                        + self.k[5][i] * A76)
                        * h;
            }
            {
                let (y_new, k6) = (&self.y_new, &mut self.k[6]);
                self.h.rhs(y_new, k6);
            }

            let mut acc = 0.0;
            for i in 0..y.len() {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(self.y_new[i].norm());
                acc += (e.norm() / scale).powi(2);
            }
            let err = (acc / y.len() as f64).sqrt();

            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                observer.accepted(t, y)?;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a clamped final step says nothing about the natural step size
                if !last || factor < 1.0 {
                    self.step = h * factor;
                }
            } else {
                let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                self.step = h * factor;
                if self.step < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NonConvergence { t, step: self.step });
                }
            }
        }
        Ok(())
    }
}
