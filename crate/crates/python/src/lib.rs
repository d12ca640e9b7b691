//! Python bindings: `import metricline_py`.
//!
//! Reports come back as the same dictionaries the CLI writes with `--json`.
//! Long runs release the interpreter lock.

use std::collections::BTreeMap;

use metricline::autodiff::{self, Status};
use metricline::catalog;
use metricline::certify::MetricCandidate;
use metricline::cli::{self, CertifyArgs, CommonArgs, Outcome, SubadditiveArgs};
use metricline::search;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn common(seed: Option<u64>, omit_timings: bool) -> CommonArgs {
    CommonArgs {
        config: None,
        seed,
        json: None,
        omit_timings,
    }
}

/// Decode the outcome's report into a dict and add the CLI exit code.
fn report_dict<'py>(py: Python<'py>, outcome: Outcome, omit_timings: bool) -> PyResult<Bound<'py, PyDict>> {
    let report = outcome.report.expect("analysis commands always produce a report");
    let report = if omit_timings { report.without_timings() } else { report };
    let dict = py
        .import("json")?
        .call_method1("loads", (report.to_json(),))?
        .cast_into::<PyDict>()?;
    dict.set_item("exit_code", outcome.code)?;
    Ok(dict)
}

/// Certify, refute or fail to decide a candidate `d(x, y)`.
///
/// Give either `expr` or `catalog` (with optional `params` and, for
/// `concave_ti`, `generator`). Returns the report dictionary; its
/// `exit_code` key holds the code the CLI would exit with.
#[pyfunction]
#[pyo3(signature = (expr=None, *, catalog=None, params=None, generator=None, seed=None, omit_timings=false))]
fn certify<'py>(
    py: Python<'py>,
    expr: Option<String>,
    catalog: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    generator: Option<String>,
    seed: Option<u64>,
    omit_timings: bool,
) -> PyResult<Bound<'py, PyDict>> {
    if expr.is_some() == catalog.is_some() {
        return Err(PyValueError::new_err("give exactly one of `expr` and `catalog`"));
    }
    let args = CertifyArgs {
        expr,
        catalog,
        params: params
            .unwrap_or_default()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect(),
        generator,
        common: common(seed, omit_timings),
    };
    let outcome = py.detach(|| cli::cmd_certify(&args)).map_err(value_error)?;
    report_dict(py, outcome, omit_timings)
}

/// Classify the translation-invariant metric `f(y − x)` of a generator.
///
/// Give either `generator` (an expression in `x`) or `fixture` (`"exa1"` or
/// `"exa2"`). With `half_line` the generator is read on `[0, ∞)` and
/// extended evenly.
#[pyfunction]
#[pyo3(signature = (generator=None, *, fixture=None, half_line=false, seed=None, omit_timings=false))]
fn subadditive<'py>(
    py: Python<'py>,
    generator: Option<String>,
    fixture: Option<String>,
    half_line: bool,
    seed: Option<u64>,
    omit_timings: bool,
) -> PyResult<Bound<'py, PyDict>> {
    if generator.is_some() == fixture.is_some() {
        return Err(PyValueError::new_err("give exactly one of `generator` and `fixture`"));
    }
    let args = SubadditiveArgs {
        generator,
        fixture,
        half_line,
        common: common(seed, omit_timings),
    };
    let outcome = py.detach(|| cli::cmd_subadditive(&args)).map_err(value_error)?;
    report_dict(py, outcome, omit_timings)
}

/// Names of the built-in candidates.
#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    catalog::NAMES.to_vec()
}

/// The DSL source of a catalog entry.
#[pyfunction]
fn catalog_formula(name: &str) -> PyResult<&'static str> {
    catalog::formula(name).map_err(value_error)
}

fn candidate(expr: &str) -> PyResult<MetricCandidate> {
    MetricCandidate::parse(expr, expr).map_err(value_error)
}

/// `d(x, y)` for an expression in `x` and `y`.
#[pyfunction]
fn evaluate(expr: &str, x: f64, y: f64) -> PyResult<f64> {
    candidate(expr)?.eval(x, y).map_err(value_error)
}

/// `∂₁₂d(x, y)` and how it was obtained: `"exact-ad"`, `"converged-fd"` or
/// `"not-converged"`.
#[pyfunction]
fn cross_partial(expr: &str, x: f64, y: f64) -> PyResult<(f64, &'static str)> {
    let est = autodiff::cross_partial(&candidate(expr)?.expr, (x, y)).map_err(value_error)?;
    let status = match est.status {
        Status::ExactAd => "exact-ad",
        Status::ConvergedFd => "converged-fd",
        Status::NotConverged => "not-converged",
    };
    Ok((est.value, status))
}

/// Smallest of the three triangle margins of `x < y < z`; negative means
/// the triangle inequality fails there.
#[pyfunction]
fn triangle_margin(expr: &str, x: f64, y: f64, z: f64) -> PyResult<f64> {
    let m = search::triangle_margin(&candidate(expr)?, (x, y, z)).map_err(value_error)?;
    Ok(m.m_min)
}

#[pymodule]
fn metricline_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(subadditive, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_formula, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(cross_partial, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_margin, m)?)?;
    Ok(())
}
