//! Python bindings. Weights cross the boundary as their JSON specs, series
//! as lists of floats, and reports as JSON text.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use weightlab::norms::{hl_norm, hp_norm, NormParams};
use weightlab::operator::{apply_series, matrix, CoefficientSeries};
use weightlab::{cli, Error, RadialWeight, WeightSpec};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_weight(spec: &str) -> PyResult<RadialWeight> {
    let spec: WeightSpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    RadialWeight::new(spec).map_err(err)
}

fn series(coeffs: Vec<f64>) -> PyResult<CoefficientSeries> {
    CoefficientSeries::new(coeffs).map_err(err)
}

/// Tail integral of the weight from `r` to 1.
#[pyfunction]
#[pyo3(signature = (weight, r, tol = 1e-10))]
fn tail(weight: &str, r: f64, tol: f64) -> PyResult<f64> {
    parse_weight(weight)?.tail(r, tol).map_err(err)
}

/// Moment of order `x`.
#[pyfunction]
#[pyo3(signature = (weight, x, tol = 1e-10))]
fn moment(weight: &str, x: f64, tol: f64) -> PyResult<f64> {
    parse_weight(weight)?.moment(x, tol).map_err(err)
}

/// Leading `n` by `n` block of the operator matrix as a list of rows.
#[pyfunction]
#[pyo3(signature = (weight, n, tol = 1e-10))]
fn operator_matrix(weight: &str, n: usize, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix(&parse_weight(weight)?, n, tol).map_err(err)?;
    Ok((0..n).map(|i| (0..n).map(|k| m.get(i, k)).collect()).collect())
}

/// First `n_out` Taylor coefficients of the operator applied to `coeffs`.
#[pyfunction]
#[pyo3(signature = (weight, coeffs, n_out, tol = 1e-10))]
fn apply(weight: &str, coeffs: Vec<f64>, n_out: usize, tol: f64) -> PyResult<Vec<f64>> {
    let out = apply_series(&parse_weight(weight)?, &series(coeffs)?, n_out, tol).map_err(err)?;
    Ok(out.coeffs)
}

#[pyfunction]
fn hardy_norm(coeffs: Vec<f64>, p: f64) -> PyResult<f64> {
    hp_norm(&series(coeffs)?, p, &NormParams::default()).map_err(err)
}

#[pyfunction]
fn hl(coeffs: Vec<f64>, p: f64) -> PyResult<f64> {
    hl_norm(&series(coeffs)?, p).map_err(err)
}

/// Runs a command-line invocation in process and returns `(report, status)`.
#[pyfunction]
fn run(argv: Vec<String>) -> PyResult<(String, i32)> {
    let spec = cli::parse_command(argv).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = cli::run(&spec).map_err(err)?;
    Ok((out.report, out.status))
}

#[pymodule]
fn weightlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tail, m)?)?;
    m.add_function(wrap_pyfunction!(moment, m)?)?;
    m.add_function(wrap_pyfunction!(operator_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_norm, m)?)?;
    m.add_function(wrap_pyfunction!(hl, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
