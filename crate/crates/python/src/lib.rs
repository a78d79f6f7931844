//! Python module `hsdfactor_py`. Structured results cross the boundary as
//! JSON and arrive in Python as plain dicts and lists.

use hsdfactor::error::Error;
use hsdfactor::hsd::{self, HsdOperator};
use hsdfactor::opalgebra::{self, FactorizationCertificate};
use hsdfactor::repthy::{self, DEFAULT_CAP};
use hsdfactor::scalar::q_to_string;
use hsdfactor::weights::{self, Weight};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::InvalidDimension(_) | Error::NotDominant(_) | Error::RankMismatch(..) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn weight(entries: Vec<i64>) -> PyResult<Weight> {
    if entries.is_empty() {
        return Err(PyValueError::new_err("weights need at least one entry"));
    }
    Ok(Weight::new(entries))
}

/// Factorization certificate for `Δ_μ^p`.
#[pyclass(name = "Certificate", frozen)]
struct PyCertificate {
    inner: FactorizationCertificate,
}

#[pymethods]
impl PyCertificate {
    #[new]
    fn new(mu: Vec<i64>, power: usize) -> PyResult<Self> {
        let inner = opalgebra::expand_laplace_power(&weight(mu)?, power).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mu(&self) -> Vec<i64> {
        self.inner.mu.entries.clone()
    }

    #[getter]
    fn power(&self) -> usize {
        self.inner.power
    }

    /// Coefficients keyed by the weight tuple, as `"num/den"` strings.
    #[getter]
    fn coefficients(&self) -> Vec<(Vec<i64>, String)> {
        self.inner.coefficients.iter().map(|(w, c)| (w.entries.clone(), q_to_string(c))).collect()
    }

    #[getter]
    fn residual_terms(&self) -> usize {
        self.inner.residual.len()
    }

    fn is_sound(&self) -> PyResult<bool> {
        opalgebra::certificate_is_sound(&self.inner).map_err(py_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Certificate(mu={}, power={}, terms={})", self.inner.mu, self.inner.power, self.inner.coefficients.len())
    }
}

/// Explicit higher spin Dirac operator `R_λ` for `λ = (k)` or `(k, l)`.
#[pyclass(name = "HsdOperator", frozen)]
struct PyHsdOperator {
    inner: HsdOperator,
    lambda: Weight,
}

#[pymethods]
impl PyHsdOperator {
    #[new]
    fn new(lambda: Vec<i64>, m: usize) -> PyResult<Self> {
        let lambda = weight(lambda)?;
        let inner = hsd::explicit_hsd(&lambda, m).map_err(py_err)?;
        Ok(Self { inner, lambda })
    }

    #[getter]
    fn fibre_dim(&self) -> usize {
        self.inner.fibre_in.len()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    /// Dimension of the kernel on the x-degree-`h` component.
    fn kernel_dim(&self, h: usize) -> PyResult<usize> {
        Ok(hsd::kernel_basis(&self.inner, h).map_err(py_err)?.len())
    }

    /// Polyharmonic order of each kernel basis element on degree `h`.
    fn kernel_polyharmonic_orders(&self, h: usize) -> PyResult<Vec<Option<usize>>> {
        hsd::kernel_basis(&self.inner, h)
            .map_err(py_err)?
            .iter()
            .map(|f| hsd::polyharmonic_order(f).map_err(py_err))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("HsdOperator(lambda={}, m={})", self.lambda, self.inner.m)
    }
}

#[pyfunction]
fn weight_box(mu: Vec<i64>) -> PyResult<Vec<Vec<i64>>> {
    Ok(weights::weight_box(&weight(mu)?).map_err(py_err)?.into_iter().map(|w| w.entries).collect())
}

#[pyfunction]
fn count_paths(nu: Vec<i64>, mu: Vec<i64>) -> PyResult<u128> {
    weights::count_paths(&weight(nu)?, &weight(mu)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (nu, mu, cap = DEFAULT_CAP))]
fn verify_path_independence(nu: Vec<i64>, mu: Vec<i64>, cap: usize) -> PyResult<bool> {
    Ok(opalgebra::verify_path_independence(&weight(nu)?, &weight(mu)?, cap).map_err(py_err)?.pass)
}

/// Dimension of `S_λ` by Weyl's formula and by explicit realization.
#[pyfunction]
fn spinor_dims(lambda: Vec<i64>, m: usize) -> PyResult<(u128, usize)> {
    let lambda = weight(lambda)?;
    let n = repthy::rank_for(m).map_err(py_err)?;
    let padded = repthy::pad(&lambda, n).map_err(py_err)?;
    let weyl = repthy::weyl_dim(&padded.shifted(), m).map_err(py_err)?;
    let realized = repthy::simplicial_monogenic_basis(&padded, m, DEFAULT_CAP).map_err(py_err)?.dim();
    Ok((weyl, realized))
}

#[pyfunction]
#[pyo3(signature = (lambda, m, max_degree = 3))]
fn verify_identities<'py>(py: Python<'py>, lambda: Vec<i64>, m: usize, max_degree: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &hsd::verify_identities(&weight(lambda)?, m, max_degree).map_err(py_err)?)
}

#[pyfunction]
fn verify_factorization<'py>(py: Python<'py>, mu: Vec<i64>, power: usize, m: usize, degree: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &hsd::verify_factorization_numeric(&weight(mu)?, power, m, degree).map_err(py_err)?)
}

#[pyfunction]
fn verify_induction<'py>(py: Python<'py>, k: u32, h: u32, m: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &hsd::verify_induction_dims(k, h, m).map_err(py_err)?)
}

#[pyfunction]
fn verify_corollary<'py>(py: Python<'py>, lambda: Vec<i64>, m: usize, max_degree: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &hsd::verify_corollary(&weight(lambda)?, m, max_degree).map_err(py_err)?)
}

/// Runs the command-line front end in-process and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    hsdfactor::cli::run(std::iter::once("hsdfactor".to_string()).chain(args))
}

#[pymodule]
fn hsdfactor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyHsdOperator>()?;
    m.add_function(wrap_pyfunction!(weight_box, m)?)?;
    m.add_function(wrap_pyfunction!(count_paths, m)?)?;
    m.add_function(wrap_pyfunction!(verify_path_independence, m)?)?;
    m.add_function(wrap_pyfunction!(spinor_dims, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identities, m)?)?;
    m.add_function(wrap_pyfunction!(verify_factorization, m)?)?;
    m.add_function(wrap_pyfunction!(verify_induction, m)?)?;
    m.add_function(wrap_pyfunction!(verify_corollary, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
