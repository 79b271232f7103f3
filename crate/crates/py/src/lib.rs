//! Python bindings. Results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

use qctol::octahedron::{self, NoiseKind};
use qctol::qmath::ComplexMatrix;
use qctol::thresholds;
use qctol::{bmachine, channels, dense_oracle, json as qjson, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ShotAborted(_) | Error::Lp(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_dict<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn gate_unitary(name: &str) -> PyResult<ComplexMatrix> {
    Ok(match name {
        "cnot" => channels::gates::cnot(),
        "cz" => channels::gates::cz(),
        "swap" => channels::gates::swap(),
        "iswap" => channels::gates::iswap(),
        other => return Err(PyValueError::new_err(format!("unknown gate {other:?}"))),
    })
}

/// Depolarizing threshold of CNOT with its certificate summary.
#[pyfunction]
#[pyo3(signature = (tol = thresholds::BISECTION_TOL))]
fn cnot_depolarizing_threshold<'py>(py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    if !(tol > 0.0 && tol < 0.5) {
        return Err(PyValueError::new_err("tol must lie in (0, 0.5)"));
    }
    let cert = py.detach(|| thresholds::cnot_depolarizing_threshold(tol)).map_err(to_py)?;
    let doc = serde_json::to_value(qjson::certificate_to_json(&cert)).expect("certificate serializes");
    to_dict(py, &doc)
}

/// Replays a certificate produced by `cnot_depolarizing_threshold`.
#[pyfunction]
fn verify_cnot_certificate(certificate_json: &str) -> PyResult<f64> {
    let cj: qjson::CertificateJson =
        serde_json::from_str(certificate_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cert = qjson::certificate_from_json(&cj).map_err(to_py)?;
    thresholds::verify_cnot_certificate(&cert).map_err(to_py)
}

/// Minimal generic or dephasing noise for the rotation by `theta`.
#[pyfunction]
#[pyo3(signature = (theta, noise = "generic"))]
fn clifford_threshold<'py>(py: Python<'py>, theta: f64, noise: &str) -> PyResult<Bound<'py, PyAny>> {
    let kind: NoiseKind = noise.parse().map_err(to_py)?;
    let t = octahedron::min_noise(theta, kind).map_err(to_py)?;
    to_dict(
        py,
        &json!({"theta": theta, "p_star": t.p_star, "closed_form": t.analytic, "noise_point": t.noise_point}),
    )
}

/// Samples a circuit given as JSON.
#[pyfunction]
#[pyo3(signature = (circuit_json, shots, seed = 0))]
fn simulate<'py>(py: Python<'py>, circuit_json: &str, shots: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let c = qjson::parse_circuit(circuit_json).map_err(to_py)?;
    let counts = py.detach(|| bmachine::run(&c, shots, seed)).map_err(to_py)?;
    to_dict(py, &json!(counts))
}

/// Exact outcome distribution of a circuit (at most 8 qubits).
#[pyfunction]
fn exact_distribution<'py>(py: Python<'py>, circuit_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let c = qjson::parse_circuit(circuit_json).map_err(to_py)?;
    let d = dense_oracle::run_dense(&c).map_err(to_py)?;
    to_dict(py, &json!(d))
}

/// Twirl weights of a two-qubit channel over a gate's symmetry group.
#[pyfunction]
#[pyo3(signature = (channel_json, group = "cnot"))]
fn twirl_weights(channel_json: &str, group: &str) -> PyResult<Vec<f64>> {
    let ch = qjson::parse_channel(channel_json).map_err(to_py)?;
    let g = thresholds::symmetry_group(&gate_unitary(group)?).map_err(to_py)?;
    Ok(thresholds::twirl(ch.choi(), &g).map_err(to_py)?.lambda)
}

#[pymodule]
fn qctol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA_VERSION", qctol::SCHEMA_VERSION)?;
    m.add_function(wrap_pyfunction!(cnot_depolarizing_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(verify_cnot_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(clifford_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(twirl_weights, m)?)?;
    Ok(())
}
