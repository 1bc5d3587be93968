//! Python bindings: lattice grids, spectral fields with the diagonal
//! operators, atoms, and the experiment runner.

use num_complex::Complex64;
use oscimax::extrapolation::combination_coefficients as combination_scheme;
use oscimax::hardy::{self, AtomSpec};
use oscimax::operators::{self, TimeGrid};
use oscimax::quadrature::{self, decay, QuadratureSpec};
use oscimax::symbols;
use oscimax::torus::{forward_transform, grid_norm, inverse_transform};
use oscimax::{CutoffProfile, GridField, LatticeGrid, SpectralField, SymbolParams};
use oscimax_cli::{parse_kind, run_experiment as run_cli_experiment, CliError, ExperimentConfig};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: oscimax::Error) -> PyErr {
    match e {
        oscimax::Error::Convergence { .. } => PyArithmeticError::new_err(e.to_string()),
        oscimax::Error::Degenerate(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn cli_to_py(e: CliError) -> PyErr {
    match e {
        CliError::Numeric(inner) => to_py(inner),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Frequency lattice `[-M/2, M/2 - 1]^n` on `[0, 2π)^n`.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
struct Grid(LatticeGrid);

#[pymethods]
impl Grid {
    #[new]
    fn new(dimension: usize, modes_per_axis: usize) -> PyResult<Self> {
        LatticeGrid::new(dimension, modes_per_axis).map(Grid).map_err(to_py)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    #[getter]
    fn modes_per_axis(&self) -> usize {
        self.0.modes_per_axis()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    /// Spatial points, each as a list of coordinates.
    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.0.spatial_len())
            .map(|i| self.0.point_at(i)[..self.0.dimension()].to_vec())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid(dimension={}, modes_per_axis={})", self.0.dimension(), self.0.modes_per_axis())
    }
}

/// Fourier coefficients on a lattice.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
struct Field(SpectralField);

#[pymethods]
impl Field {
    #[staticmethod]
    fn mode(grid: &Grid, xi: Vec<i64>, amplitude: Complex64) -> PyResult<Self> {
        SpectralField::mode(grid.0, &xi, amplitude).map(Field).map_err(to_py)
    }

    #[staticmethod]
    fn from_coefficients(grid: &Grid, coefficients: Vec<Complex64>) -> PyResult<Self> {
        SpectralField::from_coefficients(grid.0, coefficients).map(Field).map_err(to_py)
    }

    /// Coefficients of grid samples.
    #[staticmethod]
    fn from_samples(grid: &Grid, samples: Vec<Complex64>) -> PyResult<Self> {
        let g = GridField::from_samples(grid.0, samples).map_err(to_py)?;
        Ok(Field(forward_transform(&g)))
    }

    fn coefficients(&self) -> Vec<Complex64> {
        self.0.coefficients().to_vec()
    }

    fn coefficient(&self, xi: Vec<i64>) -> PyResult<Complex64> {
        self.0.coefficient(&xi).map_err(to_py)
    }

    fn samples(&self) -> Vec<Complex64> {
        inverse_transform(&self.0).into_samples()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    /// `(Σ |f(x)|^p · cell)^{1/p}` over the grid samples.
    fn grid_norm(&self, p: f64) -> PyResult<f64> {
        grid_norm(&inverse_transform(&self.0), p).map_err(to_py)
    }

    /// `e^{is|ξ|^α}`.
    fn propagate(&self, alpha: f64, s: f64) -> PyResult<Field> {
        operators::schrodinger_propagate(&self.0, alpha, s).map(Field).map_err(to_py)
    }

    /// The oscillating multiplier at time `t`.
    fn oscillating(&self, alpha: f64, beta: f64, t: f64) -> PyResult<Field> {
        let params = SymbolParams::new(alpha, beta).map_err(to_py)?;
        operators::oscillating_op(&self.0, &params, &CutoffProfile::default(), t)
            .map(Field)
            .map_err(to_py)
    }

    fn riesz_mean(&self, k: f64, alpha: f64, t: f64) -> PyResult<Field> {
        operators::riesz_mean_op(&self.0, k, alpha, t).map(Field).map_err(to_py)
    }

    /// Pointwise max over `count` geometric times in `[σ 2^{-20}, σ]` of the
    /// oscillating multiplier; returns grid samples.
    #[pyo3(signature = (alpha, beta, sigma, count = 64))]
    fn maximal_oscillating(&self, alpha: f64, beta: f64, sigma: f64, count: usize) -> PyResult<Vec<f64>> {
        let params = SymbolParams::new(alpha, beta).map_err(to_py)?;
        let profile = CutoffProfile::default();
        let times = TimeGrid::geometric(sigma, count, sigma * 2f64.powi(-20)).map_err(to_py)?;
        let family = |g: &SpectralField, t: f64| operators::oscillating_op(g, &params, &profile, t);
        let m = operators::maximal_over_times(&self.0, family, &times).map_err(to_py)?;
        Ok(m.samples().iter().map(|c| c.re).collect())
    }

    fn __repr__(&self) -> String {
        format!("Field(grid={:?}, l2_norm={})", self.0.grid(), self.0.l2_norm())
    }
}

/// Regular p-atom on `grid`: returns `(samples, moment_bound, l2_norm)`.
#[pyfunction]
fn regular_atom(
    grid: &Grid,
    p: f64,
    center: (f64, f64),
    radius: f64,
    seed: u64,
) -> PyResult<(Vec<Complex64>, Option<f64>, f64)> {
    let spec = AtomSpec::new(p, [center.0, center.1], radius, seed).map_err(to_py)?;
    let atom = hardy::make_regular_atom(&spec, &grid.0).map_err(to_py)?;
    Ok((atom.field.samples().to_vec(), atom.certified_moment_bound, atom.certified_l2))
}

/// Weak-`L^p` quasinorm of grid samples.
#[pyfunction]
fn weak_lp_quasinorm(grid: &Grid, samples: Vec<Complex64>, p: f64) -> PyResult<f64> {
    let f = GridField::from_samples(grid.0, samples).map_err(to_py)?;
    hardy::weak_lp_quasinorm(&f, p).map_err(to_py)
}

#[pyfunction]
fn partition_residual(u: f64, levels: u32) -> f64 {
    symbols::partition_residual(&CutoffProfile::default(), u, levels)
}

/// Predicted small-τ exponent of the `L`-th derivative of the transform.
#[pyfunction]
fn small_tau_exponent(alpha: f64, beta: f64, order: u32) -> f64 {
    decay::small_tau_exponent(alpha, beta, order)
}

/// Fourier cosine transform of the oscillating symbol at `tau`.
#[pyfunction]
fn symbol_transform(alpha: f64, beta: f64, tau: f64) -> PyResult<Complex64> {
    let params = SymbolParams::new(alpha, beta).map_err(to_py)?;
    quadrature::fourier_cosine_mu(&params, &CutoffProfile::default(), tau, &QuadratureSpec::default())
        .map(|q| q.value)
        .map_err(to_py)
}

#[pyfunction]
fn combination_coefficients(n_terms: usize) -> PyResult<Vec<f64>> {
    combination_scheme(n_terms).map(|s| s.coefficients).map_err(to_py)
}

/// Runs a named experiment and returns its JSON summary. `config` is an
/// optional JSON object of overrides.
#[pyfunction]
#[pyo3(signature = (name, config = None))]
fn run_experiment(py: Python<'_>, name: &str, config: Option<&str>) -> PyResult<String> {
    let kind = parse_kind(name).map_err(cli_to_py)?;
    let cfg = match config {
        Some(text) => ExperimentConfig::from_json(text).map_err(cli_to_py)?,
        None => ExperimentConfig::default(),
    };
    let resolved = cfg.resolve(kind).map_err(cli_to_py)?;
    let out = py.detach(|| run_cli_experiment(&resolved)).map_err(cli_to_py)?;
    Ok(out.summary.to_json())
}

#[pymodule]
#[pyo3(name = "oscimax")]
fn oscimax_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Field>()?;
    m.add_function(wrap_pyfunction!(regular_atom, m)?)?;
    m.add_function(wrap_pyfunction!(weak_lp_quasinorm, m)?)?;
    m.add_function(wrap_pyfunction!(partition_residual, m)?)?;
    m.add_function(wrap_pyfunction!(small_tau_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(symbol_transform, m)?)?;
    m.add_function(wrap_pyfunction!(combination_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
