//! Python bindings for `fockskin-core`.
//!
//! Parameters go in as a `ModelParams` object and results come back as plain
//! Python containers of floats and complex numbers.

use clap::Parser;
use fockskin_core::cli::{emit, run, Cli};
use fockskin_core::dynamics::{evolve_site as core_evolve_site, time_grid};
use fockskin_core::eigen::{self, Branch, EigenSet as CoreEigenSet, EigenTriple};
use fockskin_core::ion::{self, IonParams};
use fockskin_core::model::{derive_couplings, Level};
use fockskin_core::observables::{cell_distribution, eigenset_observables};
use fockskin_core::uniform::{self, UniformEigenSet as CoreUniformEigenSet, UniformParams};
use fockskin_core::{Error, ModelParams as CoreParams};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

pyo3::create_exception!(fockskin, FockskinError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParams(_) | Error::Config(_) | Error::UnknownMode(_) => PyValueError::new_err(e.to_string()),
        other => FockskinError::new_err(other.to_string()),
    }
}

fn parse_branch(s: &str) -> PyResult<Branch> {
    Branch::parse(s).ok_or_else(|| PyValueError::new_err(format!("branch must be zero, minus or plus, got '{s}'")))
}

fn parse_level(s: &str) -> PyResult<Level> {
    match s {
        "g" => Ok(Level::G),
        "e" => Ok(Level::E),
        other => Err(PyValueError::new_err(format!("level must be 'g' or 'e', got '{other}'"))),
    }
}

#[pyclass(frozen, from_py_object, module = "fockskin")]
#[derive(Clone, Copy)]
struct ModelParams {
    inner: CoreParams,
}

#[pymethods]
impl ModelParams {
    #[new]
    #[pyo3(signature = (j1, j2 = 1.0, j3 = 0.0, gamma = 50.0, phi = 0.0))]
    fn new(j1: f64, j2: f64, j3: f64, gamma: f64, phi: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreParams::new(j1, j2, j3, gamma, phi).map_err(py_err)? })
    }

    #[getter]
    fn j1(&self) -> f64 {
        self.inner.j1
    }

    #[getter]
    fn j2(&self) -> f64 {
        self.inner.j2
    }

    #[getter]
    fn j3(&self) -> f64 {
        self.inner.j3
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    /// Dict with alpha1, alpha2, beta1, beta2 (complex) and g.
    fn couplings<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = derive_couplings(&self.inner);
        let d = PyDict::new(py);
        d.set_item("alpha1", c.alpha1)?;
        d.set_item("alpha2", c.alpha2)?;
        d.set_item("beta1", c.beta1)?;
        d.set_item("beta2", c.beta2)?;
        d.set_item("g", c.g)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!("ModelParams(j1={}, j2={}, j3={}, gamma={}, phi={})", p.j1, p.j2, p.j3, p.gamma, p.phi)
    }
}

/// Analytic right and left eigenmodes of the effective Hamiltonian.
#[pyclass(frozen, module = "fockskin")]
struct EigenSet {
    inner: CoreEigenSet,
}

impl EigenSet {
    fn triple(&self, n: usize, branch: &str) -> PyResult<&EigenTriple> {
        let b = parse_branch(branch)?;
        self.inner
            .get(n, b)
            .ok_or_else(|| PyValueError::new_err(format!("no mode ({n}, {branch}) in this set")))
    }
}

#[pymethods]
impl EigenSet {
    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.basis.n_max()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// (n, branch, energy) in mode order.
    fn modes(&self) -> Vec<(usize, &'static str, f64)> {
        self.inner.modes.iter().map(|m| (m.n, m.branch.as_str(), m.energy)).collect()
    }

    fn energy(&self, n: usize, branch: &str) -> PyResult<f64> {
        Ok(self.triple(n, branch)?.energy)
    }

    /// Right eigenvector amplitudes ordered (g_0, e_0, g_1, e_1, ...).
    fn right(&self, n: usize, branch: &str) -> PyResult<Vec<Complex64>> {
        Ok(self.triple(n, branch)?.right.amplitudes().iter().copied().collect())
    }

    /// Left eigenvector amplitudes, normalized so that <L|R> = 1.
    fn left(&self, n: usize, branch: &str) -> PyResult<Vec<Complex64>> {
        Ok(self.triple(n, branch)?.left.amplitudes().iter().copied().collect())
    }

    fn cell_distribution(&self, n: usize, branch: &str) -> PyResult<Vec<f64>> {
        cell_distribution(&self.triple(n, branch)?.right).map_err(py_err)
    }

    /// (n, branch, energy, mean_n, ipr) for every mode.
    fn observables(&self) -> PyResult<Vec<(usize, &'static str, f64, f64, f64)>> {
        Ok(eigenset_observables(&self.inner)
            .map_err(py_err)?
            .into_iter()
            .map(|(n, b, o)| (n, b.as_str(), o.energy, o.mean_n, o.ipr))
            .collect())
    }

    fn max_residual(&self) -> PyResult<f64> {
        eigen::max_residual(&self.inner).map_err(py_err)
    }

    #[pyo3(signature = (count = None))]
    fn biorthonormality_error(&self, count: Option<usize>) -> f64 {
        eigen::biorthonormality_error(&self.inner, count.unwrap_or(self.inner.n_modes))
    }
}

/// Modes 0..n_modes of each branch; `n_max` forces the Fock cutoff.
#[pyfunction]
#[pyo3(signature = (params, n_modes, n_max = None))]
fn analytic_eigenset(py: Python<'_>, params: ModelParams, n_modes: usize, n_max: Option<usize>) -> PyResult<EigenSet> {
    let inner = py
        .detach(|| eigen::analytic_eigenset_with_cutoff(&params.inner, n_modes, n_max))
        .map_err(py_err)?;
    Ok(EigenSet { inner })
}

#[pyfunction]
fn verify_similarity(py: Python<'_>, params: ModelParams, n_max: usize) -> PyResult<f64> {
    py.detach(|| eigen::verify_similarity(&params.inner, n_max)).map_err(py_err)
}

/// Evolves |level, cell> on a uniform grid over [0, t_end]. Returns a dict
/// with times, norms, survival and per-time normalized cell distributions.
#[pyfunction]
#[pyo3(signature = (params, cell, t_end = 20.0, t_steps = 400, level = "g"))]
fn evolve_site<'py>(
    py: Python<'py>,
    params: ModelParams,
    cell: usize,
    t_end: f64,
    t_steps: usize,
    level: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let level = parse_level(level)?;
    if !(t_end > 0.0) || t_steps < 2 {
        return Err(PyValueError::new_err("need t_end > 0 and t_steps >= 2"));
    }
    let times = time_grid(t_end, t_steps);
    let (res, dists) = py
        .detach(|| {
            let (_, res) = core_evolve_site(&params.inner, level, cell, &times)?;
            let dists = res.distributions()?;
            Ok::<_, Error>((res, dists))
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("times", res.times)?;
    d.set_item("norms", res.norms)?;
    d.set_item("survival", res.survival.unwrap_or_default())?;
    d.set_item("distributions", dists)?;
    Ok(d)
}

/// Finite uniform chain solved through the imaginary-gauge reduction.
#[pyclass(frozen, module = "fockskin")]
struct UniformEigenSet {
    inner: CoreUniformEigenSet,
}

#[pymethods]
impl UniformEigenSet {
    #[getter]
    fn cells(&self) -> usize {
        self.inner.params.cells
    }

    #[getter]
    fn t_intra(&self) -> f64 {
        self.inner.reduction.t_intra
    }

    #[getter]
    fn scale_ratio(&self) -> f64 {
        self.inner.reduction.scale_ratio
    }

    fn energies(&self) -> Vec<f64> {
        self.inner.modes.iter().map(|m| m.energy).collect()
    }

    /// Right eigenvector of mode `index` (ascending energy), chain order.
    fn right(&self, index: usize) -> PyResult<Vec<Complex64>> {
        let m = self
            .inner
            .modes
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("mode index {index} out of range")))?;
        Ok(m.right.amplitudes().iter().copied().collect())
    }

    /// (energy, mean cell, ipr) per mode.
    fn skin_profile(&self) -> PyResult<Vec<(f64, f64, f64)>> {
        uniform::skin_profile(&self.inner).map_err(py_err)
    }

    fn max_residual(&self) -> f64 {
        uniform::max_residual(&self.inner)
    }
}

#[pyfunction]
fn solve_uniform(py: Python<'_>, params: ModelParams, cells: usize) -> PyResult<UniformEigenSet> {
    let up = UniformParams::new(params.inner, cells).map_err(py_err)?;
    let inner = py.detach(|| uniform::solve_uniform(&up)).map_err(py_err)?;
    Ok(UniformEigenSet { inner })
}

/// Spectrum only; also defined at the exceptional point.
#[pyfunction]
fn uniform_energies(params: ModelParams, cells: usize) -> PyResult<Vec<f64>> {
    let up = UniformParams::new(params.inner, cells).map_err(py_err)?;
    uniform::uniform_energies(&up).map_err(py_err)
}

#[pyfunction]
fn lamb_dicke(k_l: f64, nu: f64, mass: f64) -> PyResult<f64> {
    ion::lamb_dicke(k_l, nu, mass).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (eta, threshold = ion::DEFAULT_THRESHOLD))]
fn max_cells(eta: f64, threshold: f64) -> PyResult<usize> {
    ion::max_cells(eta, threshold).map_err(py_err)
}

/// Proposal check for |g, initial_cell>; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (
    params,
    initial_cell,
    eta,
    threshold = ion::DEFAULT_THRESHOLD,
    phonon_budget = ion::DEFAULT_PHONON_BUDGET,
    t_end = 20.0,
    t_steps = 201,
))]
fn proposal_check<'py>(
    py: Python<'py>,
    params: ModelParams,
    initial_cell: usize,
    eta: f64,
    threshold: f64,
    phonon_budget: usize,
    t_end: f64,
    t_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if !(t_end > 0.0) || t_steps < 2 {
        return Err(PyValueError::new_err("need t_end > 0 and t_steps >= 2"));
    }
    let ion = IonParams::new(eta, threshold).map_err(py_err)?.with_phonon_budget(phonon_budget);
    let times = time_grid(t_end, t_steps);
    let r = py
        .detach(|| ion::proposal_check(&params.inner, initial_cell, &ion, &times))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("eta", r.eta)?;
    d.set_item("threshold", r.threshold)?;
    d.set_item("max_cells", r.max_cells)?;
    d.set_item("phonon_budget", r.phonon_budget)?;
    d.set_item("initial_cell", r.initial_cell)?;
    d.set_item("max_occupied_cell", r.max_occupied_cell)?;
    d.set_item("min_survival", r.min_survival)?;
    d.set_item("within_max_cells", r.within_max_cells)?;
    d.set_item("within_phonon_budget", r.within_phonon_budget)?;
    d.set_item("feasible", r.feasible)?;
    Ok(d)
}

/// Runs a command-line invocation, e.g. `run_cli(["validate"])`, and returns
/// (output text, success). With `--out` the text is also written to disk.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> PyResult<(String, bool)> {
    let cli = Cli::try_parse_from(std::iter::once("fockskin".to_string()).chain(args))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = py.detach(|| run(&cli.command)).map_err(py_err)?;
    if outcome.out.is_some() {
        emit(&outcome).map_err(py_err)?;
    }
    Ok((outcome.text, outcome.success))
}

#[pymodule]
fn fockskin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FockskinError", m.py().get_type::<FockskinError>())?;
    m.add_class::<ModelParams>()?;
    m.add_class::<EigenSet>()?;
    m.add_class::<UniformEigenSet>()?;
    m.add_function(wrap_pyfunction!(analytic_eigenset, m)?)?;
    m.add_function(wrap_pyfunction!(verify_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_site, m)?)?;
    m.add_function(wrap_pyfunction!(solve_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_energies, m)?)?;
    m.add_function(wrap_pyfunction!(lamb_dicke, m)?)?;
    m.add_function(wrap_pyfunction!(max_cells, m)?)?;
    m.add_function(wrap_pyfunction!(proposal_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
