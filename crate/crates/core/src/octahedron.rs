//! Single-qubit geometry: the stabilizer octahedron, the noise needed to
//! bring phase gates into it, the Bell twirl and Clifford closure checks.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bmachine::Circuit;
use crate::channels::{self, choi_of_unitary, gates, Channel, KrausSet};
use crate::dense_oracle::run_dense_state;
use crate::qmath::{hs_inner, ComplexMatrix, DensityMatrix, Pauli, StateVector};
use crate::{Error, Result};

pub const OCTAHEDRON_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    r: [f64; 3],
}

impl BlochVector {
    pub fn new(r: [f64; 3]) -> Result<Self> {
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm <= 1.0 + 1e-9) {
            return Err(Error::InvalidState(format!("Bloch vector norm {norm} > 1")));
        }
        Ok(BlochVector { r })
    }

    pub fn of(rho: &ComplexMatrix) -> Self {
        let r = [Pauli::X, Pauli::Y, Pauli::Z].map(|p| hs_inner(&p.matrix(), rho).re);
        BlochVector { r }
    }

    pub fn r(&self) -> [f64; 3] {
        self.r
    }

    pub fn l1(&self) -> f64 {
        self.r.iter().map(|x| x.abs()).sum()
    }
}

/// `|r_x| + |r_y| + |r_z| ≤ 1`.
pub fn in_octahedron(r: &BlochVector) -> bool {
    r.l1() <= 1.0 + OCTAHEDRON_TOL
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Generic,
    Dephasing,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(NoiseKind::Generic),
            "dephasing" => Ok(NoiseKind::Dephasing),
            other => Err(Error::InvalidChannel(format!("unknown noise kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneThreshold {
    pub theta: f64,
    pub kind: NoiseKind,
    pub p_star: f64,
    /// Bloch point of the optimal noise in the x-y plane.
    pub noise_point: [f64; 2],
    /// Closed form for comparison.
    pub analytic: f64,
}

fn facet_normals() -> [[f64; 2]; 4] {
    [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
}

fn plane_point(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

fn l1_plane(theta: f64) -> f64 {
    theta.cos().abs() + theta.sin().abs()
}

/// `(L − 1)/(L + √2)` with `L = |cos θ| + |sin θ|`.
pub fn generic_closed_form(theta: f64) -> f64 {
    let l = l1_plane(theta);
    if l <= 1.0 + 1e-15 {
        0.0
    } else {
        (l - 1.0) / (l + SQRT_2)
    }
}

/// `1 − 1/L`, clamped at 0.
pub fn dephasing_closed_form(theta: f64) -> f64 {
    (1.0 - 1.0 / l1_plane(theta)).max(0.0)
}

/// Minimal `p` with `(1−p)a(θ) + p s` inside the square `|x| + |y| ≤ 1` for
/// some `s` in the unit disc. The LP keeps `s` in the hull of the disc
/// points along the four facet normals, so every solution is a valid noise
/// point; the optimum sits on one of them.
pub fn min_generic_noise(theta: f64) -> Result<PlaneThreshold> {
    let a = plane_point(theta);
    let normals = facet_normals();
    let u = normals.map(|n| [n[0] * FRAC_1_SQRT_2, n[1] * FRAC_1_SQRT_2]);
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let p = problem.add_var(1.0, (0.0, 1.0));
    // w_k = p μ_k with μ on the simplex.
    let w: Vec<_> = (0..4).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    let mut sum: Vec<_> = w.iter().map(|&v| (v, 1.0)).collect();
    sum.push((p, -1.0));
    problem.add_constraint(sum, ComparisonOp::Eq, 0.0);
    for n in &normals {
        let na = n[0] * a[0] + n[1] * a[1];
        let mut expr = vec![(p, -na)];
        for (k, uk) in u.iter().enumerate() {
            expr.push((w[k], n[0] * uk[0] + n[1] * uk[1]));
        }
        problem.add_constraint(expr, ComparisonOp::Le, 1.0 - na);
    }
    let sol = problem.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let p_star = sol[p].max(0.0);
    let noise_point = if p_star > 1e-12 {
        let mut s = [0.0; 2];
        for (k, uk) in u.iter().enumerate() {
            s[0] += sol[w[k]] * uk[0] / p_star;
            s[1] += sol[w[k]] * uk[1] / p_star;
        }
        s
    } else {
        [0.0, 0.0]
    };
    Ok(PlaneThreshold {
        theta,
        kind: NoiseKind::Generic,
        p_star,
        noise_point,
        analytic: generic_closed_form(theta),
    })
}

/// Minimal `p` with `(1−p)a(θ)` in the square: mixing toward the center.
pub fn min_dephasing_noise(theta: f64) -> PlaneThreshold {
    let p_star = dephasing_closed_form(theta);
    PlaneThreshold {
        theta,
        kind: NoiseKind::Dephasing,
        p_star,
        noise_point: [0.0, 0.0],
        analytic: p_star,
    }
}

pub fn min_noise(theta: f64, kind: NoiseKind) -> Result<PlaneThreshold> {
    match kind {
        NoiseKind::Generic => min_generic_noise(theta),
        NoiseKind::Dephasing => Ok(min_dephasing_noise(theta)),
    }
}

/// `V = |00⟩⟨0| + |11⟩⟨1|`, mapping a qubit state to a phase-covariant Choi
/// state.
fn choi_isometry() -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(4, 2);
    v[(0, 0)] = crate::qmath::ONE;
    v[(3, 1)] = crate::qmath::ONE;
    v
}

/// The channel whose Choi state is `V ρ_s V†` for `s` in the x-y disc:
/// `|i⟩⟨j| ↦ 2(ρ_s)_{ij} |i⟩⟨j|`.
pub fn plane_noise_channel(s: [f64; 2]) -> Result<Channel> {
    let rho = DensityMatrix::from_bloch([s[0], s[1], 0.0], "q")?;
    let v = choi_isometry();
    let choi = &v * rho.matrix() * v.adjoint();
    Channel::from_choi(channels::ChoiState::from_matrix(choi, 1, 1)?)
}

/// Pulls a phase-covariant Choi state back to the qubit picture.
pub fn plane_bloch_of_choi(choi: &ComplexMatrix) -> BlochVector {
    let v = choi_isometry();
    BlochVector::of(&(v.adjoint() * choi * &v))
}

/// Mixes `U(θ)` with the optimal plane noise and returns the pulled-back
/// Bloch vector of the result.
pub fn noisy_gate_point(t: &PlaneThreshold) -> Result<BlochVector> {
    let u = channels::unitary(&gates::u_theta(t.theta))?;
    let noise = plane_noise_channel(t.noise_point)?;
    let mixed = channels::mix(t.p_star, &u, &noise)?;
    Ok(plane_bloch_of_choi(mixed.choi().matrix()))
}

#[derive(Clone, Debug)]
pub struct BellTwirl {
    /// Weights on `I, X, Y, Z`.
    pub weights: [f64; 4],
    pub twirled: Channel,
    /// The averaged conjugated copies, so `twirled = ¼ E + ¾ noise`.
    pub noise: Channel,
    /// Largest off-diagonal Choi element in the Bell basis.
    pub offdiagonal: f64,
}

/// `¼ Σ_i σ_i E(σ_iᵀ ρ σ_i*) σ_i†`, a Pauli channel.
pub fn bell_twirl(e: &Channel) -> Result<BellTwirl> {
    if e.arity() != Some(1) {
        return Err(Error::InvalidChannel("Bell twirl needs a single-qubit channel".into()));
    }
    let conjugated = |paulis: &[Pauli], weight: f64| -> Result<Channel> {
        let mut ops = Vec::new();
        for p in paulis {
            let s = p.matrix();
            for k in e.kraus() {
                ops.push((&s * k * s.transpose()).scale(weight.sqrt()));
            }
        }
        Ok(Channel::from_kraus(&KrausSet::new(ops)?))
    };
    let twirled = conjugated(&Pauli::ALL, 0.25)?;
    let noise = conjugated(&[Pauli::X, Pauli::Y, Pauli::Z], 1.0 / 3.0)?;
    let bell: Vec<ComplexMatrix> = Pauli::ALL
        .iter()
        .map(|p| choi_of_unitary(&p.matrix(), 1).map(|c| c.matrix().clone()))
        .collect::<Result<_>>()?;
    let vecs: Vec<StateVector> = Pauli::ALL
        .iter()
        .map(|p| channels::vectorize(&p.matrix()).unscale(SQRT_2))
        .collect();
    let cm = twirled.choi().matrix();
    let weights = std::array::from_fn(|k| hs_inner(&bell[k], cm).re);
    let mut offdiagonal: f64 = 0.0;
    for (i, a) in vecs.iter().enumerate() {
        for (j, b) in vecs.iter().enumerate() {
            if i != j {
                offdiagonal = offdiagonal.max((a.adjoint() * cm * b)[(0, 0)].norm());
            }
        }
    }
    Ok(BellTwirl {
        weights,
        twirled,
        noise,
        offdiagonal,
    })
}

/// Signed-axis action `R_ab = ½ Tr[σ_a U σ_b U†]`.
pub fn bloch_action(u: &ComplexMatrix) -> [[f64; 3]; 3] {
    let axes = [Pauli::X, Pauli::Y, Pauli::Z].map(Pauli::matrix);
    let mut r = [[0.0; 3]; 3];
    for (a, sa) in axes.iter().enumerate() {
        for (b, sb) in axes.iter().enumerate() {
            r[a][b] = 0.5 * hs_inner(sa, &(u * sb * u.adjoint())).re;
        }
    }
    r
}

fn same_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
    hs_inner(a, b).norm() / a.nrows() as f64 > 1.0 - 1e-9
}

/// The 24 single-qubit Cliffords modulo phase, generated from H and S.
pub fn clifford1q_group() -> Vec<ComplexMatrix> {
    let gens = [gates::hadamard(), gates::phase_s()];
    let mut group = vec![crate::qmath::identity(2)];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for u in &frontier {
            for g in &gens {
                let v = g * u;
                if !group.iter().any(|w| same_up_to_phase(w, &v)) {
                    group.push(v.clone());
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    group
}

/// The six octahedron vertices `x±, y±, z±`.
pub fn octahedron_vertices() -> [[f64; 3]; 6] {
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observation0Report {
    pub circuits: usize,
    /// System states checked (one per nonzero ancilla outcome plus the
    /// unconditioned state, per circuit).
    pub outputs: usize,
    /// Outputs with `‖r‖₁ > 1`.
    pub escapes: usize,
    /// Outputs that are neither a vertex nor the center.
    pub non_vertex: usize,
    /// Largest distance of `‖r‖₁` from `{0, 1}`.
    pub max_deviation: f64,
}

impl Observation0Report {
    pub fn passes(&self) -> bool {
        self.escapes == 0 && self.non_vertex == 0
    }

    fn merge(mut self, other: Observation0Report) -> Self {
        self.circuits += other.circuits;
        self.outputs += other.outputs;
        self.escapes += other.escapes;
        self.non_vertex += other.non_vertex;
        self.max_deviation = self.max_deviation.max(other.max_deviation);
        self
    }

    fn record(&mut self, rho: &ComplexMatrix) {
        let r = BlochVector::of(rho);
        let l1 = r.l1();
        let dev = l1.min((l1 - 1.0).abs());
        self.outputs += 1;
        self.max_deviation = self.max_deviation.max(dev);
        if !in_octahedron(&r) {
            self.escapes += 1;
        }
        if dev > OCTAHEDRON_TOL {
            self.non_vertex += 1;
        }
    }
}

/// Random Clifford circuit on a system qubit (qubit 0, prepared at a
/// random vertex) and `n_ancilla` ancillas in `|0⟩`.
pub fn random_clifford_circuit<R: Rng + ?Sized>(n_ancilla: usize, rng: &mut R) -> Result<Circuit> {
    let n = n_ancilla + 1;
    let mut circuit = Circuit::new(n);
    let v = octahedron_vertices()[rng.random_range(0..6)];
    circuit.set_init(0, DensityMatrix::from_bloch(v, "q0")?)?;
    let n_gates = rng.random_range(1..=12);
    for _ in 0..n_gates {
        let kind = if n > 1 { rng.random_range(0..3) } else { rng.random_range(0..2) };
        match kind {
            0 => circuit.one(channels::hadamard(), rng.random_range(0..n))?,
            1 => circuit.one(channels::phase_s(), rng.random_range(0..n))?,
            _ => {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                circuit.two(channels::cnot(), a, b)?
            }
        };
    }
    circuit.measure(&(1..n).collect::<Vec<_>>())?;
    Ok(circuit)
}

fn check_circuit(circuit: &Circuit, report: &mut Observation0Report) -> Result<()> {
    let state = run_dense_state(circuit)?;
    report.circuits += 1;
    report.record(&state.qubit(0));
    let ancillas: Vec<usize> = (1..circuit.n_qubits()).collect();
    for outcome in 0..(1usize << ancillas.len()) {
        let bits: Vec<u8> = (0..ancillas.len())
            .map(|k| ((outcome >> k) & 1) as u8)
            .collect();
        if let (_, Some(post)) = state.project(&ancillas, &bits) {
            report.record(&post.qubit(0));
        }
    }
    Ok(())
}

/// Runs `n_circuits` random Clifford circuits through the dense oracle and
/// checks every system output against the octahedron. Work is split into
/// shards with independent streams of the master seed.
pub fn observation0_check(n_ancilla: usize, n_circuits: usize, seed: u64) -> Result<Observation0Report> {
    if n_ancilla > 2 {
        return Err(Error::InvalidCircuit(format!("{n_ancilla} ancillas; at most 2 supported")));
    }
    const SHARDS: usize = 64;
    (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let count = n_circuits / SHARDS + usize::from(shard < n_circuits % SHARDS);
            let mut report = Observation0Report::default();
            for _ in 0..count {
                let anc = rng.random_range(0..=n_ancilla);
                check_circuit(&random_clifford_circuit(anc, &mut rng)?, &mut report)?;
            }
            Ok(report)
        })
        .try_reduce(Observation0Report::default, |a, b| Ok(a.merge(b)))
}
