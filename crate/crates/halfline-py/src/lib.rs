use halfline::analysis::{fit_decay_exponent, lambda_profile, LambdaVariant};
use halfline::experiment::{preset, run_in, RunConfig, PRESETS};
use halfline::solver::solve;
use halfline::Error;
use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::Numerical(_) | Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Config from TOML text, or from a preset name when `text` names one.
fn config(text: &str) -> PyResult<RunConfig> {
    match preset(text) {
        Some(p) => RunConfig::parse(p, text),
        None => RunConfig::parse(text, "<string>"),
    }
    .map_err(py_err)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

#[pyfunction]
fn preset_text(name: &str) -> PyResult<&'static str> {
    preset(name).ok_or_else(|| PyValueError::new_err(format!("unknown preset '{name}'")))
}

#[pyfunction]
fn config_hash(text: &str) -> PyResult<String> {
    Ok(config(text)?.hash())
}

/// Runs a config (TOML text or preset name) into `output_dir` and returns
/// summary.json as a string.
#[pyfunction]
fn run(py: Python<'_>, text: &str, output_dir: PathBuf) -> PyResult<String> {
    let cfg = config(text)?;
    let s = py.detach(|| run_in(&cfg, &output_dir)).map_err(py_err)?;
    serde_json::to_string(&s).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Solves a config without writing anything: `{"t", "x", "u", "trace",
/// "status"}` with `u[k]` the interior values at `t[k]`.
#[pyfunction]
fn solve_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(text)?;
    let traj = py
        .detach(|| -> halfline::Result<_> {
            let opts = halfline::solver::SolverOptions::new(cfg.solver.method, cfg.time.t_end, cfg.time.dt).with_stride(cfg.time.stride);
            solve(&cfg.params()?, &cfg.boundary.data()?, &opts)
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("t", traj.times())?;
    d.set_item("x", traj.grid().nodes())?;
    d.set_item("u", traj.snapshots.iter().map(|s| s.u.values.clone()).collect::<Vec<Vec<C64>>>())?;
    d.set_item("trace", traj.snapshots.iter().map(|s| s.u.trace).collect::<Vec<C64>>())?;
    d.set_item("status", format!("{:?}", traj.status))?;
    Ok(d)
}

/// `Λ(ξ)` for `variant` in {"statement", "closing-display", "similarity"}.
#[pyfunction]
#[pyo3(signature = (xi, beta, alpha=-1.0, variant="statement"))]
fn lambda_values(xi: Vec<f64>, beta: f64, alpha: f64, variant: &str) -> PyResult<Vec<C64>> {
    let v: LambdaVariant = serde_json::from_value(serde_json::Value::String(variant.into())).map_err(|_| PyValueError::new_err(format!("unknown variant '{variant}'")))?;
    xi.iter().map(|&x| lambda_profile(x, beta, alpha, v).map(|l| l.value).map_err(py_err)).collect()
}

/// `(exponent, half_width)` of the least-squares power law on `[t_min, t_max]`.
#[pyfunction]
fn decay_exponent(t: Vec<f64>, y: Vec<f64>, t_min: f64, t_max: f64) -> PyResult<(f64, f64)> {
    if t.len() != y.len() {
        return Err(PyValueError::new_err("t and y differ in length"));
    }
    let s: Vec<(f64, f64)> = t.into_iter().zip(y).collect();
    let f = fit_decay_exponent(&s, (t_min, t_max)).map_err(py_err)?;
    Ok((f.exponent, f.half_width))
}

#[pymodule]
fn halfline_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_text, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_values, m)?)?;
    m.add_function(wrap_pyfunction!(decay_exponent, m)?)?;
    Ok(())
}
