//! Python bindings. Structured results are returned as dicts or JSON
//! strings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use oneclick_core::bell::{noise_threshold_maxent, noise_threshold_optimized, NoiseThreshold};
use oneclick_core::lhs::{optimal_wnr, WnrMode};
use oneclick_core::quantum::{steered_assemblage, MeasurementFamily, SchmidtState};
use oneclick_core::sim::{run_pipeline, PipelineConfig};
use oneclick_core::thresholds;
use oneclick_core::witness;

fn py_err(e: oneclick_core::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// 1/λ_max(Σ Π_x) for X equally spaced settings at spacing δ.
#[pyfunction]
fn cutoff_efficiency(settings: usize, delta: f64) -> PyResult<f64> {
    Ok(1.0 / thresholds::lambda_max_equal_spaced(settings, delta).map_err(py_err)?)
}

/// Optimal witness value for the two-setting family on cos α|00⟩ + sin α|11⟩.
#[pyfunction]
fn steering_parameter(alpha: f64, delta: f64, epsilon: f64) -> PyResult<f64> {
    let state = SchmidtState::phi_plus_alpha(alpha).map_err(py_err)?;
    let family = MeasurementFamily::one_click(2, delta, epsilon).map_err(py_err)?;
    let asm = steered_assemblage(&state, &family).map_err(py_err)?;
    witness::primal_value(&asm, state.lambda0()).map_err(py_err)
}

fn threshold_dict<'py>(py: Python<'py>, t: &NoiseThreshold) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("epsilon", t.epsilon)?;
    d.set_item("eta", t.eta)?;
    d.set_item("phi_x", t.phi_x)?;
    d.set_item("phi_y", t.phi_y)?;
    d.set_item("lambda_min", t.lambda_min)?;
    d.set_item("below_threshold", t.below_threshold)?;
    Ok(d)
}

/// Tolerable white noise for the Eberhard test; mode is "optimized" or "maxent".
#[pyfunction]
fn bell_noise_threshold<'py>(py: Python<'py>, epsilon: f64, mode: &str) -> PyResult<Bound<'py, PyDict>> {
    let t = match mode {
        "optimized" => noise_threshold_optimized(epsilon),
        "maxent" => noise_threshold_maxent(epsilon),
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
    .map_err(py_err)?;
    threshold_dict(py, &t)
}

/// Steering white-noise robustness optimised over the spacing (and α when
/// mode is "optimized"); returns (eta, delta, alpha).
#[pyfunction]
fn steering_wnr(epsilon: f64, mode: &str) -> PyResult<(f64, f64, f64)> {
    let mode = match mode {
        "maxent" => WnrMode::Maxent,
        "optimized" => WnrMode::Optimized,
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    let p = optimal_wnr(epsilon, mode).map_err(py_err)?;
    Ok((p.eta, p.delta, p.alpha))
}

/// Runs the simulation pipeline from a JSON configuration and returns the
/// JSON report.
#[pyfunction]
fn simulate(config_json: &str) -> PyResult<String> {
    let config: PipelineConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = run_pipeline(&config).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn oneclick(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cutoff_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(steering_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(bell_noise_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(steering_wnr, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
