//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any check fails unexpectedly.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use qctol::bmachine::Machine;
use qctol::channels::{self, choi_of_unitary, gates};
use qctol::octahedron::{bell_twirl, min_dephasing_noise, min_generic_noise, observation0_check};
use qctol::qmath::{self, entanglement_entropy_pure, identity, labels, max_abs_diff, BipartiteSplit, DensityMatrix, StateVector};
use qctol::random;
use qctol::thresholds::{
    cnot_depolarizing_certificate, cnot_depolarizing_spec, cnot_depolarizing_threshold, eigenprojectors, omega_analysis,
    symmetry_group, twirl, verify_cnot_certificate,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const THRESHOLD_TOL: f64 = 1e-6;
const CERT_TOL: f64 = 1e-10;
const THRESHOLD_SECONDS: f64 = 10.0;
const PI8_TOL: f64 = 1e-6;
const GRID_TOL: f64 = 1e-4;
const BELL_DIAGONAL_TOL: f64 = 1e-10;
const TWIRL_MIX_TOL: f64 = 1e-9;
const PROJECTOR_TOL: f64 = 1e-9;
const P0_TOL: f64 = 1e-10;
const TWIRL_DIAGONAL_TOL: f64 = 1e-10;
const EBIT_TOL: f64 = 1e-9;
const MARGINAL_TOL: f64 = 1e-9;
const FIDELITY_TOL: f64 = 1e-10;
const PROBABILITY_TOL: f64 = 1e-12;
const PPT_TOL: f64 = 1e-9;
const OCTAHEDRON_TOL: f64 = 1e-9;
const GOLDEN_SECONDS: f64 = 60.0;
const SCALING_SPREAD: f64 = 0.20;

/// Outcome of one criterion. `known` marks a failure that is a property of
/// the criterion itself rather than of the code.
struct Outcome {
    pass: bool,
    known: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, known: false, detail }
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let cert = cnot_depolarizing_threshold(THRESHOLD_TOL).unwrap();
    let report = cnot_depolarizing_certificate(cert.p_star).unwrap();
    let replay = verify_cnot_certificate(&cert);
    let secs = t.elapsed().as_secs_f64();
    let dp = (cert.p_star - 2.0 / 3.0).abs();
    let pass = dp <= THRESHOLD_TOL
        && cert.tight
        && report.valid
        && report.central_mixture_error < CERT_TOL
        && report.central_schmidt_residual < CERT_TOL
        && report.mirror_error < CERT_TOL
        && replay.is_ok()
        && secs < THRESHOLD_SECONDS;
    Outcome::new(
        pass,
        format!(
            "depolarized CNOT threshold p* = {:.9} (|p* - 2/3| = {dp:.1e}), central mixture {:.1e}, \
             Schmidt residual {:.1e}, mirror {:.1e}, replay {}, {secs:.2} s",
            cert.p_star,
            report.central_mixture_error,
            report.central_schmidt_residual,
            report.mirror_error,
            if replay.is_ok() { "ok" } else { "failed" },
        ),
    )
}

fn criterion_2() -> Outcome {
    let g = min_generic_noise(PI / 4.0).unwrap().p_star;
    let d = min_dephasing_noise(PI / 4.0).p_star;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let theta = TAU * (k as f64 + 0.5) / 100.0;
        let lp = min_generic_noise(theta).unwrap().p_star;
        worst = worst.max((lp - common::grid_generic(theta)).abs());
        worst = worst.max((min_dephasing_noise(theta).p_star - common::grid_dephasing(theta)).abs());
    }
    let pass = (g - 0.146447).abs() < PI8_TOL && (d - 0.292893).abs() < PI8_TOL && worst < GRID_TOL;
    Outcome::new(
        pass,
        format!("pi/8 generic {g:.6}, dephasing {d:.6}; LP vs grid on 100 angles, max gap {worst:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let (mut off, mut mix_err, mut pauli_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..100 {
        let e = random::channel(1, 1 + k % 4, &mut r);
        let t = bell_twirl(&e).unwrap();
        off = off.max(t.offdiagonal);
        let mixed = channels::mix(0.75, &e, &t.noise).unwrap();
        mix_err = mix_err.max(max_abs_diff(mixed.choi().matrix(), t.twirled.choi().matrix()));
        let pauli = channels::pauli_channel(&t.weights).unwrap();
        pauli_err = pauli_err.max(max_abs_diff(pauli.choi().matrix(), t.twirled.choi().matrix()));
    }
    let pass = off < BELL_DIAGONAL_TOL && mix_err < TWIRL_MIX_TOL && pauli_err < TWIRL_MIX_TOL;
    Outcome::new(
        pass,
        format!(
            "Bell twirl of 100 channels: off-diagonal {off:.1e}, 3/4 mixture {mix_err:.1e}, Pauli form {pauli_err:.1e}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let g = symmetry_group(&gates::cnot()).unwrap();
    let basis = eigenprojectors(&g);
    let ps = basis.projectors();
    let mut orth: f64 = 0.0;
    let mut marginal: f64 = 0.0;
    let mut sum = qmath::ComplexMatrix::zeros(16, 16);
    for (e, pe) in ps.iter().enumerate() {
        sum += pe;
        for (f, pf) in ps.iter().enumerate() {
            let want = if e == f { pe.clone() } else { qmath::ComplexMatrix::zeros(16, 16) };
            orth = orth.max(max_abs_diff(&(pe * pf), &want));
        }
        let input = qmath::trace_out(pe, 4, &[0, 1]);
        marginal = marginal.max(max_abs_diff(&input, &identity(4).scale(0.25)));
    }
    let complete = max_abs_diff(&sum, &identity(16));
    let p0 = max_abs_diff(&ps[0], choi_of_unitary(&gates::cnot(), 2).unwrap().matrix());
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut diag: f64 = 0.0;
    for k in 0..100 {
        let ch = random::channel(2, 1 + k % 4, &mut r);
        let t = twirl(ch.choi(), &g).unwrap();
        diag = diag.max(basis.offdiagonal(&t.state));
        diag = diag.max(max_abs_diff(&t.state, &basis.combine(&t.lambda)));
    }
    let pass = orth < PROJECTOR_TOL
        && complete < PROJECTOR_TOL
        && marginal < PROJECTOR_TOL
        && p0 < P0_TOL
        && diag < TWIRL_DIAGONAL_TOL;
    Outcome::new(
        pass,
        format!(
            "CNOT eigenprojectors: orthogonality {orth:.1e}, completeness {complete:.1e}, marginals {marginal:.1e}, \
             P0 vs rho(CNOT) {p0:.1e}; twirl of 100 channels off-diagonal {diag:.1e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let choi = choi_of_unitary(&gates::cnot(), 2).unwrap();
    let names = labels(&["A1", "A2", "B1", "B2"]);
    // Rank-1 Choi state: its top eigenvector is the pure state.
    let (_, vecs) = qmath::eigh(choi.matrix());
    let psi: StateVector = vecs.column(15).into_owned();
    let ebits = |l: [&str; 2], r: [&str; 2]| {
        let s = BipartiteSplit::new(&l, &r).unwrap();
        entanglement_entropy_pure(&psi, &names, &s).unwrap()
    };
    let io = ebits(["A1", "A2"], ["B1", "B2"]);
    let straight = ebits(["A1", "B1"], ["A2", "B2"]);
    let crossed = ebits(["A1", "B2"], ["A2", "B1"]);
    let io_ok = (io - 2.0).abs() < EBIT_TOL;
    let straight_ok = (straight - 1.0).abs() < EBIT_TOL;
    let crossed_as_stated = (crossed - 1.0).abs() < EBIT_TOL;
    // The crossed split carries two ebits: CNOT maps |a b⟩ to |a, a⊕b⟩, so
    // the coefficient matrix across (A1 B2)|(A2 B1) is a permutation.
    let crossed_is_two = (crossed - 2.0).abs() < EBIT_TOL;
    assert!(io_ok && straight_ok && crossed_is_two, "entropies {io} {straight} {crossed}");
    Outcome {
        pass: io_ok && straight_ok && crossed_as_stated,
        known: !crossed_as_stated,
        detail: format!(
            "rho(CNOT) ebits: (A1A2)|(B1B2) = {io:.3}, (A1B1)|(A2B2) = {straight:.3}, (A1B2)|(A2B1) = {crossed:.3} \
             (criterion expects 1.000 for the last split; a permutation coefficient matrix has 2 ebits)"
        ),
    }
}

fn criterion_6() -> Outcome {
    let r = omega_analysis(200, 6).unwrap();
    let b2_ok = r
        .b2_outcomes
        .iter()
        .all(|&(p, f)| (p - 0.5).abs() < PROBABILITY_TOL && (f - 1.0).abs() < FIDELITY_TOL);
    let pass = r.marginal_error < MARGINAL_TOL
        && b2_ok
        && r.product_inputs == 200
        && r.min_output_pt >= -PPT_TOL
        && r.passes();
    Outcome::new(
        pass,
        format!(
            "omega: marginal {:.1e}, B2 outcomes (p, F) = ({:.12}, {:.10}) and ({:.12}, {:.10}), \
             200 product inputs min output PT {:.3e}, membership {}",
            r.marginal_error,
            r.b2_outcomes[0].0,
            r.b2_outcomes[0].1,
            r.b2_outcomes[1].0,
            r.b2_outcomes[1].1,
            r.min_output_pt,
            r.membership.label()
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = observation0_check(2, 10_000, 7).unwrap();
    let pass = r.circuits == 10_000 && r.escapes == 0 && r.non_vertex == 0 && r.max_deviation < OCTAHEDRON_TOL;
    Outcome::new(
        pass,
        format!(
            "{} Clifford circuits, {} system outputs, {} escapes, {} non-vertex, max deviation {:.1e}",
            r.circuits, r.outputs, r.escapes, r.non_vertex, r.max_deviation
        ),
    )
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let results = common::run_golden(8);
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = results.iter().filter(|r| !r.report.pass).map(|r| r.name).collect();
    let min_p = results
        .iter()
        .map(|r| r.report.chi2_pvalue)
        .fold(f64::INFINITY, f64::min);
    let pass = results.len() == 12 && failed.is_empty() && secs < GOLDEN_SECONDS;
    Outcome::new(
        pass,
        format!(
            "golden suite: {} circuits x {} shots, min chi-square p = {min_p:.3}, failed {failed:?}, {secs:.1} s",
            results.len(),
            common::GOLDEN_SHOTS
        ),
    )
}

/// Seconds per cross-pair gate, median over trials.
fn cross_pair_seconds(n: usize, gates: usize, trials: usize) -> f64 {
    let spec = cnot_depolarizing_spec(0.7).unwrap();
    let mut samples = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut r = ChaCha8Rng::seed_from_u64(900 + trial as u64);
        let init: Vec<DensityMatrix> = (0..n)
            .map(|_| DensityMatrix::from_bloch(random::bloch_vector(&mut r), "q").unwrap())
            .collect();
        let mut m = Machine::new(&init, true).unwrap();
        let targets: Vec<(usize, usize)> = (0..gates)
            .map(|_| (r.random_range(0..n), r.random_range(1..n)))
            .collect();
        let t = Instant::now();
        for &(a, offset) in &targets {
            let mut b = (a + offset) % n;
            if m.partner(a) == b {
                b = (b + 1) % n;
                if b == a {
                    b = (b + 1) % n;
                }
            }
            m.apply_2q_cross_pair(&spec, a, b, &mut r).unwrap();
        }
        samples.push(t.elapsed().as_secs_f64() / gates as f64);
    }
    samples.sort_by(f64::total_cmp);
    samples[trials / 2]
}

fn criterion_9() -> Outcome {
    // Warm up caches and lazily built tables.
    cross_pair_seconds(16, 2_000, 1);
    let small = cross_pair_seconds(16, 20_000, 7);
    let large = cross_pair_seconds(256, 20_000, 7);
    let ratio = large / small;
    let pass = (ratio - 1.0).abs() <= SCALING_SPREAD;
    Outcome::new(
        pass,
        format!(
            "cross-pair gate time n=16: {:.2} us, n=256: {:.2} us, ratio {ratio:.3} (allowed 1 +/- {SCALING_SPREAD})",
            small * 1e6,
            large * 1e6
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("CNOT depolarizing threshold", criterion_1),
        ("pi/8 thresholds", criterion_2),
        ("75% bound", criterion_3),
        ("symmetry machinery", criterion_4),
        ("entanglement table", criterion_5),
        ("omega verification", criterion_6),
        ("octahedron closure", criterion_7),
        ("simulator correctness", criterion_8),
        ("scaling", criterion_9),
    ];
    let mut unexpected = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let status = match (o.pass, o.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (criterion not attainable as written)",
            (false, false) => "FAIL",
        };
        println!("criterion {} [{}] {name}: {}", k + 1, status, o.detail);
        if !o.pass && !o.known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
