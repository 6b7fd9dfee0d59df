//! Python bindings for the funcp change-point toolkit.
//!
//! Curves cross the boundary as nested lists (`values[t][i]` = curve `t` at
//! grid point `i`) on an equidistant grid over `[0, 1]`; test results come
//! back as plain dicts mirroring the CLI's JSON record.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use funcp::cusum;
use funcp::dgp::{ChangeSpec, DgpSpec, DgpVariant};
use funcp::error::Error;
use funcp::funspace::{FunctionSeries, Grid};
use funcp::resample::{self, FsbTuning, TestOutcome};
use funcp::rng::RngStream;

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn series_from_values(values: Vec<Vec<f64>>) -> PyResult<FunctionSeries> {
    let g = values.first().map(|r| r.len()).unwrap_or(0);
    if g < 3 {
        return Err(PyValueError::new_err(
            "need curves with at least 3 grid points",
        ));
    }
    let grid = Grid::equidistant(g).map_err(to_py_err)?;
    FunctionSeries::from_rows(grid, &values).map_err(to_py_err)
}

fn outcome_dict<'py>(py: Python<'py>, outcome: &TestOutcome) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("method", outcome.method.as_str())?;
    dict.set_item("n", outcome.n)?;
    dict.set_item("G", outcome.grid_len)?;
    dict.set_item("m", outcome.m)?;
    dict.set_item("p", outcome.p)?;
    dict.set_item("block_len", outcome.block_len)?;
    dict.set_item("bandwidth", outcome.bandwidth)?;
    dict.set_item("B", outcome.b)?;
    dict.set_item("alpha", outcome.alpha)?;
    dict.set_item("statistic", outcome.statistic)?;
    dict.set_item(
        "critical_value",
        if outcome.critical_value.is_finite() {
            Some(outcome.critical_value)
        } else {
            None
        },
    )?;
    dict.set_item("p_value", outcome.p_value)?;
    dict.set_item("reject", outcome.reject)?;
    dict.set_item("argmax_k", outcome.argmax_k)?;
    dict.set_item("seed", outcome.seed)?;
    Ok(dict)
}

fn variant_from_name(dgp: &str, c: f64) -> PyResult<DgpVariant> {
    match dgp {
        "far1-bridge" => Ok(DgpVariant::Far1Bridge { c }),
        "far1-squared-bridge" => Ok(DgpVariant::Far1SquaredBridge { c }),
        "fma1" => Ok(DgpVariant::Fma1),
        other => Err(PyValueError::new_err(format!("unknown dgp '{other}'"))),
    }
}

/// Simulate a curve sample; returns values as a list of lists.
#[pyfunction]
#[pyo3(signature = (dgp="far1-bridge", n=100, grid=101, c=0.245, seed=1, burn_in=100, change_at=None, jump=0.0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    dgp: &str,
    n: usize,
    grid: usize,
    c: f64,
    seed: u64,
    burn_in: usize,
    change_at: Option<usize>,
    jump: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let mut spec = DgpSpec {
        variant: variant_from_name(dgp, c)?,
        n,
        grid_points: grid,
        burn_in,
        change: None,
    };
    if let Some(k_star) = change_at {
        spec = spec.with_change(ChangeSpec {
            k_star,
            jump,
            rate: None,
        });
    }
    let series = spec.generate(&RngStream::new(seed)).map_err(to_py_err)?;
    Ok(series.rows().map(|r| r.to_vec()).collect())
}

/// CUSUM scan: returns (statistic, argmax_k, profile).
#[pyfunction]
fn cusum_scan(values: Vec<Vec<f64>>) -> PyResult<(f64, usize, Vec<f64>)> {
    let series = series_from_values(values)?;
    let res = cusum::cusum(&series).map_err(to_py_err)?;
    Ok((res.statistic, res.argmax_k, res.profile))
}

/// Sieve-bootstrap change-point test.
#[pyfunction]
#[pyo3(signature = (values, b=500, alpha=0.05, seed=1, m=None, p=None, threshold=0.85))]
#[allow(clippy::too_many_arguments)]
fn fsb_test<'py>(
    py: Python<'py>,
    values: Vec<Vec<f64>>,
    b: usize,
    alpha: f64,
    seed: u64,
    m: Option<usize>,
    p: Option<usize>,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let series = series_from_values(values)?;
    let tuning = FsbTuning {
        m,
        p,
        threshold,
        p_max: None,
    };
    let outcome =
        resample::fsb_test(&series, b, alpha, &tuning, &RngStream::new(seed)).map_err(to_py_err)?;
    outcome_dict(py, &outcome)
}

/// Non-overlapping block bootstrap change-point test.
#[pyfunction]
#[pyo3(signature = (values, b=500, alpha=0.05, seed=1, block_len=None))]
fn nbb_test<'py>(
    py: Python<'py>,
    values: Vec<Vec<f64>>,
    b: usize,
    alpha: f64,
    seed: u64,
    block_len: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let series = series_from_values(values)?;
    let outcome = resample::nbb_test(&series, b, alpha, block_len, &RngStream::new(seed))
        .map_err(to_py_err)?;
    outcome_dict(py, &outcome)
}

/// Change-point test against the simulated limit distribution.
#[pyfunction]
#[pyo3(signature = (values, alpha=0.05, seed=1, d=None, bandwidth=None, paths=5000))]
fn asymptotic_test<'py>(
    py: Python<'py>,
    values: Vec<Vec<f64>>,
    alpha: f64,
    seed: u64,
    d: Option<usize>,
    bandwidth: Option<usize>,
    paths: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let series = series_from_values(values)?;
    let outcome =
        resample::asymptotic_test(&series, alpha, d, bandwidth, paths, &RngStream::new(seed))
            .map_err(to_py_err)?;
    outcome_dict(py, &outcome)
}

/// Functional principal components: returns (eigenvalues, eigenfunctions).
#[pyfunction]
#[pyo3(signature = (values, m=5))]
fn fpca(values: Vec<Vec<f64>>, m: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let series = series_from_values(values)?;
    let eig = series
        .cov_operator()
        .and_then(|op| op.eigendecompose(m))
        .map_err(to_py_err)?;
    let funcs = (0..eig.m())
        .map(|j| eig.eigenfunction(j).to_vec())
        .collect();
    Ok((eig.eigenvalues().to_vec(), funcs))
}

#[pymodule]
fn funcp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(cusum_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fsb_test, m)?)?;
    m.add_function(wrap_pyfunction!(nbb_test, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_test, m)?)?;
    m.add_function(wrap_pyfunction!(fpca, m)?)?;
    Ok(())
}
