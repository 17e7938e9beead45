//! Python bindings: geometry tables, hierarchy flows, integration and the self-check suite.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::nsolit::check::{self, CheckOptions, Suite};
use ::nsolit::hierarchy::{flow_rhs as rhs, hamiltonian as ham, HierarchyConst};
use ::nsolit::metric::parse_metric;
use ::nsolit::pde::{integrate_flow, FlowConfig};
use ::nsolit::pipeline::compute_tables;
use ::nsolit::report::geometry_json;
use ::nsolit::spectral::{SpectralOps, VField};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Rows of an N×p sample table as a field on [0, period).
fn field(rows: &[Vec<f64>], period: f64) -> PyResult<VField> {
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(value_error("rows must all have the same length"));
    }
    VField::new(rows.len(), p, period, rows.concat()).map_err(value_error)
}

fn rows(v: &VField) -> Vec<Vec<f64>> {
    (0..v.n).map(|j| v.at(j).to_vec()).collect()
}

/// Geometry tables of a metric source as a JSON string.
#[pyfunction]
#[pyo3(signature = (metric, samples = 4, seed = 0))]
fn geometry(metric: &str, samples: usize, seed: u64) -> PyResult<String> {
    let spec = parse_metric(metric).map_err(value_error)?;
    let tables = compute_tables(&spec).map_err(value_error)?;
    geometry_json(&tables, &spec.sample_xy(samples, seed)).map_err(value_error)
}

/// Right-hand side of flow k for samples `v` (N rows of p components).
#[pyfunction]
#[pyo3(signature = (k, v, period, kappa = 0.0))]
fn flow_rhs(k: u32, v: Vec<Vec<f64>>, period: f64, kappa: f64) -> PyResult<Vec<Vec<f64>>> {
    let f = field(&v, period)?;
    let ops = SpectralOps::for_field(&f).map_err(value_error)?;
    let c = HierarchyConst::new(kappa).map_err(value_error)?;
    Ok(rows(&rhs(&ops, k, &f, c).map_err(value_error)?))
}

/// Hamiltonian H^(k) for k in 0..=1.
#[pyfunction]
fn hamiltonian(k: u32, v: Vec<Vec<f64>>, period: f64) -> PyResult<f64> {
    let f = field(&v, period)?;
    let ops = SpectralOps::for_field(&f).map_err(value_error)?;
    ham(&ops, k, &f).map_err(value_error)
}

/// Integrates a flow configuration given as JSON; returns diagnostics and the final field.
#[pyfunction]
fn integrate<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg: FlowConfig = serde_json::from_str(config).map_err(value_error)?;
    let t = integrate_flow(&cfg).map_err(value_error)?;
    let d = &t.diagnostics;
    let out = PyDict::new(py);
    out.set_item("tau", d.iter().map(|x| x.tau).collect::<Vec<_>>())?;
    out.set_item("H0", d.iter().map(|x| x.h0).collect::<Vec<_>>())?;
    out.set_item("H1", d.iter().map(|x| x.h1).collect::<Vec<_>>())?;
    out.set_item("H2a", d.iter().map(|x| x.h2a).collect::<Vec<_>>())?;
    out.set_item("H2b", d.iter().map(|x| x.h2b).collect::<Vec<_>>())?;
    out.set_item("maxnorm", d.iter().map(|x| x.maxnorm).collect::<Vec<_>>())?;
    if d.iter().any(|x| x.unit_defect.is_some()) {
        out.set_item("unit_defect", d.iter().map(|x| x.unit_defect.unwrap_or(f64::NAN)).collect::<Vec<_>>())?;
    }
    let last = t.last();
    out.set_item("final", rows(&last.v))?;
    if let Some(e) = &last.e_perp {
        out.set_item("final_e_perp", rows(e))?;
    }
    Ok(out)
}

/// Runs the self-check suite ("geometry", "hierarchy" or "all"); returns (passed, report JSON).
#[pyfunction]
#[pyo3(signature = (suite = "all", samples = 100, seed = 0))]
fn self_check(suite: &str, samples: usize, seed: u64) -> PyResult<(bool, String)> {
    let suite = match suite {
        "geometry" => Suite::Geometry,
        "hierarchy" => Suite::Hierarchy,
        "all" => Suite::All,
        other => return Err(value_error(format!("unknown suite {other:?}"))),
    };
    let report = check::run(suite, &CheckOptions { samples, seed, ..CheckOptions::default() });
    Ok((report.passed, report.to_json()))
}

#[pymodule]
fn nsolit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(geometry, m)?)?;
    m.add_function(wrap_pyfunction!(flow_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(self_check, m)?)?;
    Ok(())
}
