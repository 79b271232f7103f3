use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qctol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qctol"))
        .args(args)
        .env("QCTOL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = qctol(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(args: &[&str]) -> i32 {
    qctol(args).status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BELL: &str = r#"{"n_qubits": 2,
  "gates": [{"type": "1q", "targets": [0], "channel": "hadamard"},
            {"type": "2q", "targets": [0, 1], "channel": "cnot"}],
  "measure": [0, 1]}"#;

#[test]
fn cnot_default_threshold() {
    let v = json_ok(&["thresholds", "cnot-depolarizing"]);
    assert!((v["p_star"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    assert_eq!(v["tight_upper"], Value::Bool(true));
    assert_eq!(v["reference_bound"].as_f64(), Some(0.74));
    assert_eq!(v["schema_version"].as_str(), Some(qctol::SCHEMA_VERSION));
    assert_eq!(v["invocation"][1].as_str(), Some("thresholds"));
    assert!(v["certificate"]["mirror_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn cnot_coarse_tolerance() {
    let v = json_ok(&["thresholds", "cnot-depolarizing", "--tol", "1e-3"]);
    assert!((v["p_star"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-3);
    assert_eq!(code(&["thresholds", "cnot-depolarizing", "--tol", "0"]), 2);
}

#[test]
fn certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    json_ok(&["thresholds", "cnot-depolarizing", "--out", path(&cert)]);
    let v = json_ok(&["thresholds", "cnot-depolarizing", "--verify", path(&cert)]);
    assert_eq!(v["valid"], Value::Bool(true));

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    doc["p_star"] = 0.6.into();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    let out = qctol(&["thresholds", "cnot-depolarizing", "--verify", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], Value::Bool(false));

    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{\"p_star\": 1}").unwrap();
    assert_eq!(code(&["thresholds", "cnot-depolarizing", "--verify", path(&junk)]), 2);
}

#[test]
fn clifford_values() {
    let p = |noise: &str, theta: &str| {
        json_ok(&["thresholds", "clifford", "--theta", theta, "--noise", noise])["p_star"]
            .as_f64()
            .unwrap()
    };
    assert!((p("generic", "0.785398") - 0.146447).abs() < 1e-6);
    assert!((p("dephasing", "0.785398") - 0.292893).abs() < 1e-6);
    assert!(p("generic", "0").abs() < 1e-12);
    assert!(p("dephasing", "0").abs() < 1e-12);
    assert!((p("generic", "-0.785398") - 0.146447).abs() < 1e-6);
}

#[test]
fn invalid_input_exits_2() {
    assert_eq!(code(&["thresholds", "clifford", "--theta", "0.1", "--noise", "amplitude"]), 2);
    assert_eq!(code(&["thresholds", "clifford", "--theta", "0.1", "--noise", "generic", "--extra"]), 2);
    assert_eq!(code(&["simulate", "--circuit", "/nonexistent/circuit.json"]), 2);
    assert_eq!(code(&["analyze", "gate", "--name", "toffoli", "--split", "S"]), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_qctol"))
        .args(["verify", "omega", "--inputs", "5"])
        .env("QCTOL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gate_entanglement() {
    let ebits = |name: &str, split: &str| {
        json_ok(&["analyze", "gate", "--name", name, "--split", split])["ebits"]
            .as_f64()
            .unwrap()
    };
    assert!((ebits("cnot", "S") - 1.0).abs() < 1e-9);
    assert!((ebits("cnot", "EB") - 2.0).abs() < 1e-9);
    assert!((ebits("cnot", "SS") - 2.0).abs() < 1e-9);
    assert!(ebits("identity", "S").abs() < 1e-9);
    assert!((ebits("identity", "EB") - 2.0).abs() < 1e-9);
    let v = json_ok(&["analyze", "gate", "--name", "cz", "--split", "S"]);
    assert!((v["lambda0_bound"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(v["ppt"], Value::Bool(false));
}

#[test]
fn simulate_bell() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bell.json");
    fs::write(&file, BELL).unwrap();
    let args = ["simulate", "--circuit", path(&file), "--shots", "100000", "--seed", "11"];
    let a = qctol(&args);
    let b = qctol(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let zeros = v["counts"]["00"].as_u64().unwrap();
    let ones = v["counts"]["11"].as_u64().unwrap();
    assert_eq!(zeros + ones, 100_000);
    assert!((zeros as f64 / 1e5 - 0.5).abs() < 0.01);

    let mut with_oracle = args.to_vec();
    with_oracle.push("--oracle");
    let v = json_ok(&with_oracle);
    assert_eq!(v["comparison"]["pass"], Value::Bool(true));
}

#[test]
fn twirl_sums_to_one() {
    let dir = tempfile::tempdir().unwrap();
    // A Kraus channel mixing CZ with a bit flip on the second qubit.
    let mut kraus = Vec::new();
    for (w, flip) in [(0.7f64, false), (0.3, true)] {
        let a = w.sqrt();
        let mut m = vec![vec![[0.0, 0.0]; 4]; 4];
        for i in 0..4 {
            let sign = if i == 3 { -1.0 } else { 1.0 };
            let j = if flip { i ^ 1 } else { i };
            m[j][i] = [a * sign, 0.0];
        }
        kraus.push(m);
    }
    let ch = serde_json::json!({"kind": "kraus", "data": kraus});
    let file = dir.path().join("ch.json");
    fs::write(&file, ch.to_string()).unwrap();
    let v = json_ok(&["verify", "twirl", "--group", "cnot", "--channel", path(&file)]);
    let lambda: Vec<f64> = v["lambda"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(lambda.len(), 16);
    assert!((lambda.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    assert!(lambda.iter().all(|&l| l >= -1e-9));

    fs::write(&file, r#"{"kind": "named", "name": "hadamard"}"#).unwrap();
    assert_eq!(code(&["verify", "twirl", "--group", "cnot", "--channel", path(&file)]), 2);
}

#[test]
fn verification_reports() {
    let v = json_ok(&["verify", "observation0", "--circuits", "300", "--seed", "7"]);
    assert_eq!(v["escapes"].as_u64(), Some(0));
    assert_eq!(v["pass"], Value::Bool(true));
    let v = json_ok(&["verify", "omega", "--inputs", "20"]);
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn pretty_table() {
    let out = qctol(&["--pretty", "thresholds", "clifford", "--theta", "0.785398", "--noise", "generic"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('{'));
    let row = text.lines().find(|l| l.starts_with("p_star")).unwrap();
    assert!(row.ends_with("0.146446609"));
}
