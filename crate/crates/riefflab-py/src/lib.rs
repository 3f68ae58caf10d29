//! Python bindings: lattices, symbols, the Weyl calculus, torus elements and
//! the check harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::riefflab::dynamics::{AlgebraElement, DynSystem};
use ::riefflab::harness::{self, SuiteConfig};
use ::riefflab::modulation::rieffel_product;
use ::riefflab::phase_space::symplectic_fourier;
use ::riefflab::weyl::{moyal, weyl_quantize};
use ::riefflab::{LabError, PhaseGrid, PhasePoint, Symbol, C64};

fn py_err(e: LabError) -> PyErr {
    match e {
        LabError::InvalidArgument(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Self-dual N×N phase-space lattice.
#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid(PhaseGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(points: usize) -> PyResult<Self> {
        PhaseGrid::new(points).map(PyGrid).map_err(py_err)
    }

    #[getter]
    fn points(&self) -> usize {
        self.0.points
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta
    }

    #[getter]
    fn extent(&self) -> f64 {
        self.0.extent
    }

    #[getter]
    fn measure_weight(&self) -> f64 {
        self.0.measure_weight
    }

    fn __repr__(&self) -> String {
        format!("Grid({})", self.0.points)
    }
}

/// Sampled symbol on Ξ.
#[pyclass(name = "Symbol", frozen, from_py_object)]
#[derive(Clone)]
struct PySymbol(Symbol);

#[pymethods]
impl PySymbol {
    #[staticmethod]
    #[pyo3(signature = (grid, x=0.0, xi=0.0, width=1.0))]
    fn gaussian(grid: &PyGrid, x: f64, xi: f64, width: f64) -> Self {
        PySymbol(Symbol::gaussian(grid.0, PhasePoint::new(x, xi), width))
    }

    #[staticmethod]
    fn constant(grid: &PyGrid, value: C64) -> Self {
        PySymbol(Symbol::constant(grid.0, value))
    }

    /// Plane-wave character e^{-i[[X, ·]]}.
    #[staticmethod]
    fn character(grid: &PyGrid, x: f64, xi: f64) -> Self {
        PySymbol(Symbol::character(grid.0, PhasePoint::new(x, xi)))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    /// Row-major samples, rows indexed by x.
    fn samples(&self) -> Vec<Vec<C64>> {
        self.0.samples().rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn eval(&self, x: f64, xi: f64) -> C64 {
        self.0.eval(PhasePoint::new(x, xi))
    }

    fn conj(&self) -> Self {
        PySymbol(self.0.conj())
    }

    fn scale(&self, c: C64) -> Self {
        PySymbol(self.0.scale(c))
    }

    fn translate(&self, x: f64, xi: f64) -> Self {
        PySymbol(self.0.translate(PhasePoint::new(x, xi)))
    }

    fn __add__(&self, other: &PySymbol) -> Self {
        PySymbol(self.0.add(&other.0))
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    fn sup_distance(&self, other: &PySymbol) -> f64 {
        self.0.sup_distance(&other.0)
    }

    fn inner(&self, other: &PySymbol) -> C64 {
        self.0.inner(&other.0)
    }
}

/// Symplectic Fourier transform.
#[pyfunction]
fn fourier(f: &PySymbol) -> PyResult<PySymbol> {
    symplectic_fourier(&f.0).map(PySymbol).map_err(py_err)
}

/// Moyal product f # g.
#[pyfunction(name = "moyal")]
fn py_moyal(f: &PySymbol, g: &PySymbol) -> PyResult<PySymbol> {
    moyal(&f.0, &g.0).map(PySymbol).map_err(py_err)
}

/// Weyl quantization as a dense N×N matrix on L²(𝒳).
#[pyfunction]
fn weyl_matrix(f: &PySymbol) -> PyResult<Vec<Vec<C64>>> {
    let op = weyl_quantize(&f.0).map_err(py_err)?;
    Ok(op.entries.rows().into_iter().map(|r| r.to_vec()).collect())
}

#[pyfunction]
fn weyl_norm(f: &PySymbol) -> PyResult<f64> {
    Ok(weyl_quantize(&f.0).map_err(py_err)?.op_norm())
}

/// Dynamical system: "translation" or "kronecker:a1,a2".
#[pyclass(name = "System", frozen)]
struct PySystem(DynSystem);

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (spec, torus_m=32))]
    fn new(spec: &str, torus_m: usize) -> PyResult<Self> {
        DynSystem::parse(spec, torus_m).map(PySystem).map_err(py_err)
    }

    fn spec(&self) -> String {
        self.0.spec()
    }

    /// Torus character e_m.
    fn monomial(&self, m1: i64, m2: i64) -> PyResult<PyElement> {
        AlgebraElement::monomial(&self.0, [m1, m2]).map(PyElement).map_err(py_err)
    }
}

/// Element of the coefficient algebra.
#[pyclass(name = "Element", frozen)]
struct PyElement(AlgebraElement);

#[pymethods]
impl PyElement {
    fn __add__(&self, other: &PyElement) -> PyResult<Self> {
        self.0.add(&other.0).map(PyElement).map_err(py_err)
    }

    fn scale(&self, c: C64) -> Self {
        PyElement(self.0.scale(c))
    }

    fn conj(&self) -> Self {
        PyElement(self.0.conj())
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    fn distance(&self, other: &PyElement) -> f64 {
        self.0.distance(&other.0)
    }

    /// Rieffel product f ⋆ g.
    fn star(&self, other: &PyElement) -> PyResult<Self> {
        rieffel_product(&self.0, &other.0).map(PyElement).map_err(py_err)
    }
}

/// Harness configuration in key=value form.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig(SuiteConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text=""))]
    fn new(text: &str) -> PyResult<Self> {
        SuiteConfig::parse(text).map(PyConfig).map_err(py_err)
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.0.set(key, value).map_err(py_err)
    }

    fn __str__(&self) -> String {
        self.0.to_config_string()
    }
}

/// Runs the configured suites; returns the JSON report.
#[pyfunction]
fn run_suite(py: Python<'_>, cfg: &PyConfig) -> PyResult<String> {
    let cfg = cfg.0.clone();
    py.detach(|| harness::run_suite(&cfg)).map(|r| r.to_json()).map_err(py_err)
}

/// Residual of a check at each lattice size, as (N, residual) pairs.
#[pyfunction]
fn refinement_study(py: Python<'_>, cfg: &PyConfig, check: &str, levels: Vec<usize>) -> PyResult<Vec<(usize, f64)>> {
    let cfg = cfg.0.clone();
    py.detach(|| harness::refinement_study(&cfg, check, &levels)).map(|t| t.rows).map_err(py_err)
}

#[pymodule(name = "riefflab")]
fn riefflab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySymbol>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyElement>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(fourier, m)?)?;
    m.add_function(wrap_pyfunction!(py_moyal, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_norm, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(refinement_study, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
