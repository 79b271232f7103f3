//! `qctol` command-line front end. Every command prints one JSON document.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qctol::channels::gates;
use qctol::octahedron::{self, NoiseKind};
use qctol::qmath::{self, entanglement_entropy_pure, labels, ComplexMatrix, StateVector};
use qctol::thresholds::{self, Membership, Split};
use qctol::{bmachine, dense_oracle, json as qjson, Error};

/// Bound quoted alongside the depolarized-CNOT threshold for comparison.
const REFERENCE_BOUND: f64 = 0.74;
const TWIRL_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "qctol", version, about = "Noise thresholds and simulation of bi-entangling machines")]
struct Cli {
    /// Print a two-column table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Noise thresholds.
    #[command(subcommand)]
    Thresholds(ThresholdCmd),
    /// Properties of a two-qubit gate.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Sample a circuit file.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare against exact density-matrix evolution.
        #[arg(long)]
        oracle: bool,
        /// Significance level of the comparison.
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
    },
    /// Numerical checks.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand, Debug)]
enum ThresholdCmd {
    /// Depolarizing threshold of CNOT.
    CnotDepolarizing {
        #[arg(long, default_value_t = thresholds::BISECTION_TOL)]
        tol: f64,
        /// Write the full certificate here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replay a certificate file instead of computing one.
        #[arg(long, conflicts_with = "out")]
        verify: Option<PathBuf>,
    },
    /// Minimal noise making a single-qubit rotation Clifford-simulable.
    Clifford {
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, value_enum)]
        noise: Noise,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Noise {
    Generic,
    Dephasing,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Generic => NoiseKind::Generic,
            Noise::Dephasing => NoiseKind::Dephasing,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GateName {
    Cnot,
    CnotReversed,
    Cz,
    Swap,
    Iswap,
    Identity,
}

impl GateName {
    fn unitary(self) -> ComplexMatrix {
        match self {
            GateName::Cnot => gates::cnot(),
            GateName::CnotReversed => gates::cnot_reversed(),
            GateName::Cz => gates::cz(),
            GateName::Swap => gates::swap(),
            GateName::Iswap => gates::iswap(),
            GateName::Identity => qmath::identity(4),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    #[value(name = "S")]
    S,
    #[value(name = "SS")]
    Ss,
    #[value(name = "EB")]
    Eb,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::S => Split::S,
            SplitArg::Ss => Split::SS,
            SplitArg::Eb => Split::EB,
        }
    }
}

#[derive(Subcommand, Debug)]
enum AnalyzeCmd {
    /// Entanglement and PPT data of a gate's Choi state across a split.
    Gate {
        #[arg(long, value_enum)]
        name: GateName,
        #[arg(long, value_enum)]
        split: SplitArg,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Checks on the ω channel.
    Omega {
        #[arg(long, default_value_t = 200)]
        inputs: usize,
        #[arg(long, default_value_t = 6)]
        seed: u64,
    },
    /// Clifford circuits with ancillas never leave the octahedron.
    Observation0 {
        #[arg(long, default_value_t = 10_000)]
        circuits: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        ancillas: usize,
    },
    /// Twirl a two-qubit channel over a gate's symmetry group.
    Twirl {
        #[arg(long, value_enum)]
        group: GateName,
        #[arg(long)]
        channel: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad arguments or input files (exit 2).
    Input(String),
    /// A check ran and failed; the report is still printed (exit 3).
    Verification(Value),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ShotAborted(_) | Error::Lp(_) => Failure::Internal(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn checked(report: Value, ok: bool) -> Outcome {
    if ok {
        Ok(report)
    } else {
        Err(Failure::Verification(report))
    }
}

fn cnot_depolarizing(tol: f64, out: Option<&Path>, verify: Option<&Path>) -> Outcome {
    if let Some(path) = verify {
        let cj: qjson::CertificateJson =
            serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let cert = qjson::certificate_from_json(&cj)?;
        return match thresholds::verify_cnot_certificate(&cert) {
            Ok(residual) => Ok(json!({"valid": true, "p_star": cert.p_star, "tight_upper": cert.tight, "residual": residual})),
            Err(e) => Err(Failure::Verification(
                json!({"valid": false, "p_star": cert.p_star, "reason": e.to_string()}),
            )),
        };
    }
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Failure::Input(format!("--tol must lie in (0, 0.5), got {tol}")));
    }
    let cert = thresholds::cnot_depolarizing_threshold(tol)?;
    if let Some(path) = out {
        // Full precision: the witnesses are replayed at 1e-8.
        let text = serde_json::to_string_pretty(&qjson::certificate_to_json(&cert))
            .map_err(|e| Failure::Internal(e.to_string()))?;
        fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let report = thresholds::cnot_depolarizing_certificate(cert.p_star)?;
    Ok(json!({
        "p_star": cert.p_star,
        "tight_upper": cert.tight,
        "reference_bound": REFERENCE_BOUND,
        "tolerance": cert.tolerance,
        "certificate": {
            "split": cert.split.to_string(),
            "kind": cert.label(),
            "lower_witnesses": cert.lower_witness.len(),
            "upper_terms": cert.upper_witness.as_ref().map_or(0, |d| d.terms.len()),
            "central_mixture_error": report.central_mixture_error,
            "central_schmidt_residual": report.central_schmidt_residual,
            "mirror_error": report.mirror_error,
            "outer_min_pt": report.outer_min_pt,
        },
    }))
}

fn clifford(theta: f64, noise: Noise) -> Outcome {
    if !theta.is_finite() {
        return Err(Failure::Input(format!("--theta must be finite, got {theta}")));
    }
    let t = octahedron::min_noise(theta, noise.into())?;
    let gate_point = octahedron::noisy_gate_point(&t)?.r();
    Ok(json!({
        "theta": theta,
        "noise": format!("{:?}", noise).to_lowercase(),
        "p_star": t.p_star,
        "closed_form": t.analytic,
        "noise_point": t.noise_point,
        "noisy_gate_point": [gate_point[0], gate_point[1]],
    }))
}

fn analyze_gate(name: GateName, split: SplitArg) -> Outcome {
    let u = name.unitary();
    let split = Split::from(split);
    let choi = unitary_choi(&u)?;
    let names = labels(&["A1", "A2", "B1", "B2"]);
    let (_, vecs) = qmath::eigh(&choi);
    let psi: StateVector = vecs.column(15).into_owned();
    let ebits = entanglement_entropy_pure(&psi, &names, &split.bipartite()?)?.max(0.0);
    let min_pt = thresholds::split_min_pt(&choi, split)?;
    let lambda0 = thresholds::lambda0_opt(&u, split)?;
    Ok(json!({
        "gate": format!("{:?}", name).to_lowercase(),
        "split": split.to_string(),
        "ebits": ebits,
        "min_pt_eigenvalue": min_pt,
        "ppt": min_pt >= -thresholds::PPT_TOL,
        "lambda0_bound": lambda0,
    }))
}

fn unitary_choi(u: &ComplexMatrix) -> Result<ComplexMatrix, Failure> {
    Ok(qctol::channels::choi_of_unitary(u, 2)?.matrix().clone())
}

fn simulate(path: &Path, shots: u64, seed: u64, oracle: bool, alpha: f64) -> Outcome {
    if shots == 0 {
        return Err(Failure::Input("--shots must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Input(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    let circuit = qjson::parse_circuit(&read(path)?)?;
    let counts = bmachine::run(&circuit, shots, seed)?;
    let mut doc = qjson::counts_to_json(&counts, seed, shots);
    if !oracle {
        return Ok(doc);
    }
    let exact = dense_oracle::run_dense(&circuit)?;
    let r = dense_oracle::compare(&counts, &exact, alpha);
    let table: Vec<Value> = r
        .table
        .iter()
        .map(|row| json!({"outcome": row.outcome, "observed": row.observed, "expected": row.expected}))
        .collect();
    doc["comparison"] = json!({
        "tv_distance": r.tv_distance,
        "chi2": r.chi2,
        "dof": r.dof,
        "p_value": r.chi2_pvalue,
        "alpha": r.alpha,
        "pass": r.pass,
        "table": table,
    });
    checked(doc, r.pass)
}

fn membership_json(m: &Membership) -> Value {
    let mut v = json!({"label": m.label()});
    match m {
        Membership::CertifiedIn { decomposition, error } => {
            v["terms"] = decomposition.terms.len().into();
            v["error"] = (*error).into();
        }
        Membership::CertifiedOutByPpt { reference, lambda0, bound } => {
            v["reference"] = (*reference).into();
            v["lambda0"] = (*lambda0).into();
            v["bound"] = (*bound).into();
        }
        Membership::Undecided { residual } => v["residual"] = (*residual).into(),
    }
    v
}

fn verify(cmd: VerifyCmd) -> Outcome {
    match cmd {
        VerifyCmd::Omega { inputs, seed } => {
            if inputs == 0 {
                return Err(Failure::Input("--inputs must be positive".into()));
            }
            let r = thresholds::omega_analysis(inputs, seed)?;
            let report = json!({
                "marginal_error": r.marginal_error,
                "b2_outcomes": r.b2_outcomes.iter().map(|&(p, f)| json!({"probability": p, "ghz_fidelity": f})).collect::<Vec<_>>(),
                "ghz_witness": r.ghz_witness,
                "product_inputs": r.product_inputs,
                "min_output_pt": r.min_output_pt,
                "membership": membership_json(&r.membership),
                "pass": r.passes(),
            });
            checked(report, r.passes())
        }
        VerifyCmd::Observation0 { circuits, seed, ancillas } => {
            let r = octahedron::observation0_check(ancillas, circuits, seed)?;
            let report = json!({
                "circuits": r.circuits,
                "ancillas": ancillas,
                "seed": seed,
                "outputs": r.outputs,
                "escapes": r.escapes,
                "non_vertex": r.non_vertex,
                "max_deviation": r.max_deviation,
                "pass": r.passes(),
            });
            checked(report, r.passes())
        }
        VerifyCmd::Twirl { group, channel } => {
            let ch = qjson::parse_channel(&read(&channel)?)?;
            if ch.in_qubits() != 2 || ch.choi().out_qubits() != 2 {
                return Err(Failure::Input("twirl needs a two-qubit channel".into()));
            }
            let g = thresholds::symmetry_group(&group.unitary())?;
            let t = thresholds::twirl(ch.choi(), &g)?;
            let offdiagonal = thresholds::eigenprojectors(&g).offdiagonal(&t.state);
            let sum: f64 = t.lambda.iter().sum();
            let ok = (sum - 1.0).abs() < TWIRL_TOL && t.lambda.iter().all(|&l| l > -TWIRL_TOL);
            let report = json!({
                "group": format!("{:?}", group).to_lowercase(),
                "lambda": t.lambda,
                "sum": sum,
                "offdiagonal": offdiagonal,
                "pass": ok,
            });
            checked(report, ok)
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Thresholds(ThresholdCmd::CnotDepolarizing { tol, out, verify }) => {
            cnot_depolarizing(tol, out.as_deref(), verify.as_deref())
        }
        Command::Thresholds(ThresholdCmd::Clifford { theta, noise }) => clifford(theta, noise),
        Command::Analyze(AnalyzeCmd::Gate { name, split }) => analyze_gate(name, split),
        Command::Simulate { circuit, shots, seed, oracle, alpha } => simulate(&circuit, shots, seed, oracle, alpha),
        Command::Verify(cmd) => verify(cmd),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("QCTOL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("QCTOL_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let invocation: Vec<String> = std::iter::once("qctol".to_string())
        .chain(std::env::args().skip(1))
        .collect();
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(v) => {
            println!("{}", output::render(v, &invocation, cli.pretty));
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(v)) => {
            println!("{}", output::render(v, &invocation, cli.pretty));
            eprintln!("qctol: verification failed");
            ExitCode::from(3)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("qctol: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("qctol: {msg}");
            ExitCode::from(1)
        }
    }
}
