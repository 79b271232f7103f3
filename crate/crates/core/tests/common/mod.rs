//! Golden circuits and oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use qctol::bmachine::{self, BiEntanglingGateSpec, Circuit, KrausPair};
use qctol::channels::{self, gates, Channel, MeasurePrepare};
use qctol::dense_oracle::{self, ComparisonReport};
use qctol::qmath::{basis_state, identity, labels, DensityMatrix};
use qctol::thresholds::{bell_projectors, cnot_depolarizing_spec};
use qctol::{json, random};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN_SHOTS: u64 = 100_000;
pub const GOLDEN_ALPHA: f64 = 0.001;

fn state(name: &str) -> DensityMatrix {
    bmachine::named_state(name).unwrap()
}

fn init(c: &mut Circuit, names: &[&str]) {
    for (q, n) in names.iter().enumerate() {
        c.set_init(q, state(n)).unwrap();
    }
}

/// `½ id + ½ SWAP`, all weight on the trivial and swap branches.
fn half_swap() -> BiEntanglingGateSpec {
    let id = || vec![KrausPair::new(identity(2), identity(2)).unwrap()];
    BiEntanglingGateSpec::new([0.5, 0.5, 0.0], id(), id(), None).unwrap()
}

/// Every pairing of the Kraus operators of two independent channels.
fn product_spec(a: &Channel, b: &Channel) -> BiEntanglingGateSpec {
    let pairs = a
        .kraus()
        .iter()
        .flat_map(|ka| b.kraus().iter().map(move |kb| KrausPair::new(ka.clone(), kb.clone()).unwrap()))
        .collect();
    BiEntanglingGateSpec::separable_only(pairs).unwrap()
}

/// Bell measurement that writes the outcome index into the measured pair.
fn bell_readout() -> MeasurePrepare {
    let prepared = (0..4)
        .map(|k| DensityMatrix::from_pure(&basis_state(2, k), labels(&["a", "b"])).unwrap())
        .collect();
    MeasurePrepare::new(bell_projectors(), prepared).unwrap()
}

/// Z measurement on the first qubit only, repreparing a random two-qubit
/// state per outcome.
fn coarse_measurement(rng: &mut ChaCha8Rng) -> MeasurePrepare {
    let z = |b| qctol::qmath::kron(&gates::projector(b), &identity(2));
    let prepared = (0..2)
        .map(|_| DensityMatrix::new(random::density_matrix(4, 2, rng), labels(&["a", "b"])).unwrap())
        .collect();
    MeasurePrepare::new(vec![z(0), z(1)], prepared).unwrap()
}

/// Z readout that reprepares `|+⟩` or `|−⟩`.
fn z_to_x() -> Channel {
    let plus = DensityMatrix::from_bloch([1.0, 0.0, 0.0], "q").unwrap();
    let minus = DensityMatrix::from_bloch([-1.0, 0.0, 0.0], "q").unwrap();
    let mp = MeasurePrepare::new(vec![gates::projector(0), gates::projector(1)], vec![plus, minus]).unwrap();
    Channel::from_measure_prepare(&mp)
}

fn bell() -> Circuit {
    let mut c = Circuit::new(2);
    c.one(channels::hadamard(), 0).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.measure_all();
    c
}

/// Two Bell pairs, a Bell measurement across them, then a Bell-basis
/// readout of the outer qubits, which must agree with the recorded outcome.
fn swapping() -> Circuit {
    let mut c = Circuit::new(4);
    c.one(channels::hadamard(), 0).unwrap();
    c.one(channels::hadamard(), 2).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.two(channels::cnot(), 2, 3).unwrap();
    c.bient(BiEntanglingGateSpec::eb_only(bell_readout()).unwrap(), 1, 2).unwrap();
    c.two(channels::cnot(), 0, 3).unwrap();
    c.one(channels::hadamard(), 0).unwrap();
    c.measure_all();
    c
}

fn noisy_cnot_bell(p: f64) -> Circuit {
    let mut c = Circuit::new(4);
    c.one(channels::hadamard(), 1).unwrap();
    c.bient(cnot_depolarizing_spec(p).unwrap(), 1, 2).unwrap();
    c.measure(&[1, 2]).unwrap();
    c
}

fn noisy_chain() -> Circuit {
    let spec = cnot_depolarizing_spec(0.7).unwrap();
    let mut c = Circuit::new(6);
    c.one(channels::hadamard(), 0).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.bient(spec.clone(), 1, 2).unwrap();
    c.bient(spec.clone(), 2, 4).unwrap();
    c.one(channels::hadamard(), 3).unwrap();
    c.bient(spec, 3, 5).unwrap();
    c.one(channels::phase_s(), 2).unwrap();
    c.one(channels::hadamard(), 2).unwrap();
    c.measure_all();
    c
}

fn swap_mix() -> Circuit {
    let mut c = Circuit::new(4);
    init(&mut c, &["+", "0", "1", "-i"]);
    c.two(channels::cnot(), 0, 1).unwrap();
    c.bient(half_swap(), 1, 2).unwrap();
    c.one(channels::hadamard(), 3).unwrap();
    c.bient(half_swap(), 0, 3).unwrap();
    c.one(channels::hadamard(), 0).unwrap();
    c.measure_all();
    c
}

fn product_kraus() -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let spec = product_spec(&random::channel(1, 2, &mut rng), &random::channel(1, 3, &mut rng));
    let mut c = Circuit::new(4);
    c.one(channels::hadamard(), 0).unwrap();
    c.one(channels::hadamard(), 2).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.two(channels::cnot(), 2, 3).unwrap();
    c.bient(spec, 0, 2).unwrap();
    c.one(channels::hadamard(), 1).unwrap();
    c.measure_all();
    c
}

fn coarse_eb() -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mp = coarse_measurement(&mut rng);
    let mut c = Circuit::new(4);
    init(&mut c, &["+", "0", "+i", "0"]);
    c.two(channels::cnot(), 0, 1).unwrap();
    c.two(channels::cnot(), 2, 3).unwrap();
    c.bient(BiEntanglingGateSpec::eb_only(mp).unwrap(), 1, 2).unwrap();
    c.one(channels::hadamard(), 0).unwrap();
    c.measure(&[0, 3, 1, 2]).unwrap();
    c
}

fn odd_register() -> Circuit {
    let mut c = Circuit::new(3);
    c.one(channels::hadamard(), 0).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.bient(cnot_depolarizing_spec(0.75).unwrap(), 1, 2).unwrap();
    c.measure_all();
    c
}

fn mid_circuit() -> Circuit {
    let mut c = Circuit::new(2);
    c.one(channels::hadamard(), 0).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.one(z_to_x(), 1).unwrap();
    c.one(channels::hadamard(), 1).unwrap();
    c.one(channels::pi8(), 0).unwrap();
    c.one(channels::hadamard(), 0).unwrap();
    c.measure_all();
    c
}

fn reversed() -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let spec = product_spec(&channels::dephase(), &random::channel(1, 2, &mut rng));
    let mut c = Circuit::new(4);
    init(&mut c, &["+", "0", "0", "+"]);
    c.two(channels::cnot(), 1, 0).unwrap();
    c.two(channels::cnot(), 3, 2).unwrap();
    c.bient(spec, 3, 0).unwrap();
    c.one(channels::hadamard(), 3).unwrap();
    c.measure(&[3, 2, 1, 0]).unwrap();
    c
}

/// Eight qubits, twenty gates of every kind.
fn mixed8() -> Circuit {
    let spec = cnot_depolarizing_spec(0.7).unwrap();
    let paulis = channels::pauli_channel(&[0.85, 0.05, 0.04, 0.06]).unwrap();
    let mut c = Circuit::new(8);
    init(&mut c, &["0", "+", "0", "-", "+i", "0", "1", "mixed"]);
    c.one(channels::hadamard(), 0).unwrap();
    c.two(channels::cnot(), 0, 1).unwrap();
    c.two(channels::unitary(&gates::cz()).unwrap(), 2, 3).unwrap();
    c.one(channels::pi8(), 4).unwrap();
    c.two(channels::cnot(), 4, 5).unwrap();
    c.one(channels::hadamard(), 6).unwrap();
    c.two(channels::depolarize(2), 6, 7).unwrap();
    c.bient(spec.clone(), 1, 2).unwrap();
    c.one(channels::dephase(), 3).unwrap();
    c.bient(spec.clone(), 3, 4).unwrap();
    c.bient(half_swap(), 5, 6).unwrap();
    c.one(paulis, 7).unwrap();
    c.bient(spec.clone(), 7, 0).unwrap();
    c.one(channels::phase_s(), 2).unwrap();
    c.one(channels::hadamard(), 2).unwrap();
    c.bient(spec, 2, 5).unwrap();
    c.one(channels::hadamard(), 1).unwrap();
    c.one(channels::pi8(), 6).unwrap();
    c.one(channels::hadamard(), 6).unwrap();
    c.one(channels::depolarize(1), 0).unwrap();
    c.measure_all();
    c
}

const FROM_JSON: &str = r#"{
  "n_qubits": 6,
  "init": [{"bloch": [0.6, 0.0, 0.8]}, "+", {"bloch": [0.0, -0.5, 0.5]}, "0", "-i", {"bloch": [0.3, 0.3, -0.3]}],
  "gates": [
    {"type": "2q", "targets": [0, 1], "channel": "cnot"},
    {"type": "1q", "targets": [2], "channel": "pi8"},
    {"type": "2q", "targets": [2, 3], "channel": "cz"},
    {"type": "2q", "targets": [1, 2], "bient_spec": {"name": "cnot_depolarized", "p": 0.8}},
    {"type": "1q", "targets": [1], "channel": "dephase"},
    {"type": "2q", "targets": [4, 5], "channel": "swap"},
    {"type": "2q", "targets": [3, 5], "bient_spec": {"name": "cnot_depolarized", "p": 0.9}},
    {"type": "1q", "targets": [5], "channel": "hadamard"},
    {"type": "1q", "targets": [0], "channel": "hadamard"}
  ],
  "measure": [0, 1, 2, 3, 4, 5]
}"#;

fn from_json() -> Circuit {
    json::parse_circuit(FROM_JSON).unwrap()
}

pub fn golden_suite() -> Vec<(&'static str, Circuit)> {
    vec![
        ("bell", bell()),
        ("entanglement_swapping", swapping()),
        ("noisy_cnot_67", noisy_cnot_bell(0.67)),
        ("noisy_chain", noisy_chain()),
        ("swap_mix", swap_mix()),
        ("product_kraus", product_kraus()),
        ("coarse_eb", coarse_eb()),
        ("odd_register", odd_register()),
        ("mid_circuit", mid_circuit()),
        ("reversed_targets", reversed()),
        ("mixed_8q", mixed8()),
        ("from_json", from_json()),
    ]
}

pub struct GoldenResult {
    pub name: &'static str,
    pub report: ComparisonReport,
    pub elapsed: Duration,
}

pub fn run_golden(seed: u64) -> Vec<GoldenResult> {
    golden_suite()
        .into_iter()
        .map(|(name, c)| {
            let t = Instant::now();
            let counts = bmachine::run(&c, GOLDEN_SHOTS, seed).unwrap();
            let exact = dense_oracle::run_dense(&c).unwrap();
            let report = dense_oracle::compare(&counts, &exact, GOLDEN_ALPHA);
            GoldenResult {
                name,
                report,
                elapsed: t.elapsed(),
            }
        })
        .collect()
}

pub fn swapping_circuit() -> Circuit {
    swapping()
}

// Octahedron grid-search oracle.

const NORMALS: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];

/// Smallest `p` that pulls `(1−p)a + p s` into `|x| + |y| ≤ 1`, for a fixed
/// noise point `s`.
fn required_p(a: [f64; 2], s: [f64; 2]) -> f64 {
    let mut p: f64 = 0.0;
    for n in NORMALS {
        let na = n[0] * a[0] + n[1] * a[1];
        let ns = n[0] * s[0] + n[1] * s[1];
        if na > 1.0 {
            if ns >= na {
                return f64::INFINITY;
            }
            p = p.max((na - 1.0) / (na - ns));
        }
    }
    p
}

/// Brute force over noise points on the unit circle, step 1e-4 rad.
pub fn grid_generic(theta: f64) -> f64 {
    let a = [theta.cos(), theta.sin()];
    let steps = (TAU / 1e-4).ceil() as usize;
    (0..steps)
        .map(|k| {
            let phi = k as f64 * 1e-4;
            required_p(a, [phi.cos(), phi.sin()])
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn grid_dephasing(theta: f64) -> f64 {
    required_p([theta.cos(), theta.sin()], [0.0, 0.0])
}
