//! Symmetry groups of two-qubit gates, twirling, split separability and
//! noise thresholds.
//!
//! Choi states of two-qubit channels live on `A1 A2 B1 B2` (positions
//! 0..4). The three splits are
//!
//! * [`Split::S`]  `(A1B1)|(A2B2)`, separable operations;
//! * [`Split::SS`] `(A1B2)|(A2B1)`, separable operations after a swap;
//! * [`Split::EB`] `(A1A2)|(B1B2)`, entanglement-breaking operations.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bmachine::{BiEntanglingGateSpec, KrausPair};
use crate::channels::{self, choi_of_unitary, gates, ChoiState, MeasurePrepare};
use crate::convex::{decompose, eigen_cut_lp, stabilizer_projectors, stabilizer_states};
use crate::qmath::{
    self, as_pauli_string, eigh, identity, kron, max_abs_diff, min_eigenvalue, outer, permute_qubits,
    real, transpose_qubits, BipartiteSplit, ComplexMatrix, DensityMatrix, Pauli, StateVector, ONE,
};
use crate::{Error, Result};

/// Eigenvalue tolerance for PPT decisions.
pub const PPT_TOL: f64 = 1e-9;
/// Default bisection tolerance on `p`.
pub const BISECTION_TOL: f64 = 1e-6;
/// Reconstruction error below which a decomposition counts as exact.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

const A1: usize = 0;
const A2: usize = 1;
const B1: usize = 2;
const B2: usize = 3;
const LABELS: [&str; 4] = ["A1", "A2", "B1", "B2"];

/// Partition of a two-qubit Choi state, or the union class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    S,
    SS,
    EB,
    BiEntangling,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::S, Split::SS, Split::EB];

    /// `(left, right)` qubit positions; `None` for the union class.
    pub fn positions(self) -> Option<([usize; 2], [usize; 2])> {
        match self {
            Split::S => Some(([A1, B1], [A2, B2])),
            Split::SS => Some(([A1, B2], [A2, B1])),
            Split::EB => Some(([A1, A2], [B1, B2])),
            Split::BiEntangling => None,
        }
    }

    fn sides(self) -> Result<([usize; 2], [usize; 2])> {
        self.positions()
            .ok_or_else(|| Error::InvalidSplit("the bi-entangling class is not a bipartition".into()))
    }

    pub fn bipartite(self) -> Result<BipartiteSplit> {
        let (l, r) = self.sides()?;
        BipartiteSplit::new(&[LABELS[l[0]], LABELS[l[1]]], &[LABELS[r[0]], LABELS[r[1]]])
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::S => "S",
            Split::SS => "SS",
            Split::EB => "EB",
            Split::BiEntangling => "bi-entangling",
        }
    }

    /// Partial transpose on the right block.
    pub fn partial_transpose(self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (_, r) = self.sides()?;
        Ok(transpose_qubits(m, 4, &r))
    }

    /// Reorders `left ⊗ right` into `A1 A2 B1 B2`.
    pub fn assemble(self, left: &ComplexMatrix, right: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (l, r) = self.sides()?;
        let order = [l[0], l[1], r[0], r[1]];
        let mut perm = [0usize; 4];
        for (k, &label) in order.iter().enumerate() {
            perm[label] = k;
        }
        Ok(permute_qubits(&kron(left, right), 4, &perm))
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S" => Ok(Split::S),
            "SS" => Ok(Split::SS),
            "EB" => Ok(Split::EB),
            "BI-ENTANGLING" | "B" => Ok(Split::BiEntangling),
            other => Err(Error::InvalidSplit(format!("unknown split {other:?}"))),
        }
    }
}

/// Minimum eigenvalue of the partial transpose across `split`.
pub fn split_min_pt(m: &ComplexMatrix, split: Split) -> Result<f64> {
    Ok(min_eigenvalue(&split.partial_transpose(m)?))
}

// ---------------------------------------------------------------------------
// Symmetry group

/// The 16 operators `W_ij = σ_iᵀ ⊗ σ_jᵀ ⊗ U(σ_i ⊗ σ_j)U†`, index `4i + j`.
#[derive(Clone, Debug)]
pub struct GateSymmetryGroup {
    base_unitary: ComplexMatrix,
    elements: Vec<ComplexMatrix>,
}

/// Generator indices `W_0x, W_0z, W_x0, W_z0`.
const GENERATORS: [usize; 4] = [1, 3, 4, 12];

pub fn symmetry_group(u: &ComplexMatrix) -> Result<GateSymmetryGroup> {
    if u.shape() != (4, 4) {
        return Err(Error::InvalidMatrix("symmetry group needs a 4×4 unitary".into()));
    }
    let err = qmath::unitarity_error(u);
    if err > channels::UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    let mut elements = Vec::with_capacity(16);
    for i in Pauli::ALL {
        for j in Pauli::ALL {
            let (si, sj) = (i.matrix(), j.matrix());
            let a = kron(&si.transpose(), &sj.transpose());
            let b = u * kron(&si, &sj) * u.adjoint();
            elements.push(kron(&a, &b));
        }
    }
    Ok(GateSymmetryGroup {
        base_unitary: u.clone(),
        elements,
    })
}

impl GateSymmetryGroup {
    pub fn base_unitary(&self) -> &ComplexMatrix {
        &self.base_unitary
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// `W_ij` with Pauli indices `i, j ∈ {I, X, Y, Z}`.
    pub fn element(&self, i: Pauli, j: Pauli) -> &ComplexMatrix {
        &self.elements[4 * i.index() + j.index()]
    }

    /// Every element is a tensor product of single-qubit Paulis up to phase.
    pub fn is_local(&self) -> bool {
        self.elements.iter().all(|w| as_pauli_string(w, 1e-9).is_some())
    }

    /// Largest deviation from closure under products, up to phase.
    pub fn closure_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.elements {
            for b in &self.elements {
                let ab = a * b;
                let best = self
                    .elements
                    .iter()
                    .map(|c| qmath::hs_inner(c, &ab).norm() / 16.0)
                    .fold(0.0, f64::max);
                worst = worst.max(1.0 - best);
            }
        }
        worst
    }

    /// Largest commutator norm between elements.
    pub fn commutation_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.elements {
            for b in &self.elements {
                worst = worst.max(max_abs_diff(&(a * b), &(b * a)));
            }
        }
        worst
    }

    /// Largest deviation of `W² = I` (each `W_ij` is Hermitian and unitary).
    pub fn involution_error(&self) -> f64 {
        self.elements
            .iter()
            .map(|w| max_abs_diff(&(w * w), &identity(16)))
            .fold(0.0, f64::max)
    }

    pub fn commutator_with(&self, m: &ComplexMatrix) -> f64 {
        self.elements
            .iter()
            .map(|w| max_abs_diff(&(w * m), &(m * w)))
            .fold(0.0, f64::max)
    }
}

/// The 16 joint eigenprojectors `|e⟩⟨e|`, index `8e₀ + 4e₁ + 2e₂ + e₃`.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    projectors: Vec<ComplexMatrix>,
    vectors: Vec<StateVector>,
}

pub fn eigenprojectors(g: &GateSymmetryGroup) -> EigenBasis {
    let id = identity(16);
    let mut projectors = Vec::with_capacity(16);
    let mut vectors = Vec::with_capacity(16);
    for e in 0..16usize {
        let mut p = id.clone();
        for (alpha, &gi) in GENERATORS.iter().enumerate() {
            let bit = (e >> (3 - alpha)) & 1;
            let sign = if bit == 0 { 1.0 } else { -1.0 };
            let factor = (&id + g.elements[gi].scale(sign)).scale(0.5);
            p = p * factor;
        }
        let (_, vecs) = eigh(&p);
        vectors.push(vecs.column(15).into_owned());
        projectors.push(p);
    }
    EigenBasis { projectors, vectors }
}

impl EigenBasis {
    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn projector(&self, e: usize) -> &ComplexMatrix {
        &self.projectors[e]
    }

    /// Largest `|⟨e|M|e'⟩|` with `e ≠ e'`.
    pub fn offdiagonal(&self, m: &ComplexMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            let ma = m * a;
            for (j, b) in self.vectors.iter().enumerate() {
                if i != j {
                    worst = worst.max(b.dotc(&ma).norm());
                }
            }
        }
        worst
    }

    /// `Σ_e λ_e |e⟩⟨e|`.
    pub fn combine(&self, lambda: &[f64]) -> ComplexMatrix {
        self.projectors
            .iter()
            .zip(lambda)
            .fold(ComplexMatrix::zeros(16, 16), |acc, (p, &l)| acc + p.scale(l))
    }
}

/// Result of averaging a Choi state over a symmetry group.
#[derive(Clone, Debug)]
pub struct Twirl {
    pub state: ComplexMatrix,
    pub lambda: Vec<f64>,
}

pub fn twirl(c: &ChoiState, g: &GateSymmetryGroup) -> Result<Twirl> {
    if c.in_qubits() != 2 || c.out_qubits() != 2 {
        return Err(Error::InvalidChannel("twirl needs a two-qubit channel".into()));
    }
    Ok(twirl_matrix(c.matrix(), g))
}

pub(crate) fn twirl_matrix(m: &ComplexMatrix, g: &GateSymmetryGroup) -> Twirl {
    let state = g
        .elements
        .iter()
        .fold(ComplexMatrix::zeros(16, 16), |acc, w| acc + w * m * w)
        .scale(1.0 / 16.0);
    let basis = eigenprojectors(g);
    let lambda = basis
        .projectors
        .iter()
        .map(|p| qmath::hs_inner(p, m).re)
        .collect();
    Twirl { state, lambda }
}

// ---------------------------------------------------------------------------
// Certificates

/// One step of a bisection: the PPT value reached at `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PptSample {
    pub p: f64,
    pub min_pt_eigenvalue: f64,
}

/// `weight · assemble(left ⊗ right)` on the term's split.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub split: Split,
    pub left: ComplexMatrix,
    pub right: ComplexMatrix,
}

/// Explicit convex decomposition of a four-party state into split-product
/// terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProductDecomposition {
    pub terms: Vec<ProductTerm>,
}

impl ProductDecomposition {
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::zeros(16, 16);
        for t in &self.terms {
            m += t.split.assemble(&t.left, &t.right)?.scale(t.weight);
        }
        Ok(m)
    }

    /// Checks weights form a probability vector, every factor is a valid
    /// density matrix and the reconstruction matches `target` to `tol`.
    pub fn verify(&self, target: &ComplexMatrix, tol: f64) -> Result<f64> {
        let total: f64 = self.terms.iter().map(|t| t.weight).sum();
        if self.terms.iter().any(|t| t.weight < 0.0) || (total - 1.0).abs() > tol {
            return Err(Error::InvalidProbability(total));
        }
        for (k, t) in self.terms.iter().enumerate() {
            for side in [&t.left, &t.right] {
                DensityMatrix::new(side.clone(), qmath::labels(&["x", "y"])).map_err(|e| {
                    Error::InvalidState(format!("decomposition term {k}: {e}"))
                })?;
            }
        }
        let err = max_abs_diff(&self.reconstruct()?, target);
        if err > tol {
            return Err(Error::InvalidChannel(format!(
                "decomposition misses target by {err:.3e}"
            )));
        }
        Ok(err)
    }

    /// Total weight per split class `(S, SS, EB)`.
    pub fn class_weights(&self) -> [f64; 3] {
        let mut w = [0.0; 3];
        for t in &self.terms {
            match t.split {
                Split::S => w[0] += t.weight,
                Split::SS => w[1] += t.weight,
                Split::EB => w[2] += t.weight,
                Split::BiEntangling => {}
            }
        }
        w
    }

    /// Converts the decomposition into an executable gate. Terms across S
    /// and SS must be pure products; EB terms become measure-prepare
    /// outcomes.
    pub fn to_gate_spec(&self) -> Result<BiEntanglingGateSpec> {
        let weights = self.class_weights();
        let mut sep = Vec::new();
        let mut swp = Vec::new();
        let mut povm = Vec::new();
        let mut prepared = Vec::new();
        for t in &self.terms {
            if t.weight <= 0.0 {
                continue;
            }
            match t.split {
                Split::S | Split::SS => {
                    let class = if t.split == Split::S { weights[0] } else { weights[1] };
                    let l = pure_vector(&t.left)?;
                    let r = pure_vector(&t.right)?;
                    // |K⟩⟩ factorizes as vec(A) ⊗ vec(B) with Choi (1/4)|K⟩⟩⟨⟨K|.
                    let scale = 2.0 * (t.weight / class).sqrt();
                    let (a, b) = if t.split == Split::S {
                        (unvec(&l).scale(scale), unvec(&r))
                    } else {
                        // left is (A1, B2), right is (A2, B1); K = (A ⊗ B)·SWAP
                        // with A taking A2 → B1 and B taking A1 → B2.
                        (unvec(&r).scale(scale), unvec(&l))
                    };
                    let pair = KrausPair::new(a, b)?;
                    if t.split == Split::S {
                        sep.push(pair);
                    } else {
                        swp.push(pair);
                    }
                }
                Split::EB => {
                    povm.push(t.left.transpose().scale(4.0 * t.weight / weights[2]));
                    prepared.push(DensityMatrix::new(
                        qmath::hermitian_part(&t.right),
                        qmath::labels(&["B1", "B2"]),
                    )?);
                }
                Split::BiEntangling => {
                    return Err(Error::InvalidSplit("term without a bipartition".into()))
                }
            }
        }
        let eb = if povm.is_empty() {
            None
        } else {
            Some(MeasurePrepare::new(povm, prepared)?)
        };
        BiEntanglingGateSpec::new(weights, sep, swp, eb)
    }
}

fn pure_vector(m: &ComplexMatrix) -> Result<StateVector> {
    let (vals, vecs) = eigh(m);
    let top = vals[vals.len() - 1];
    if (top - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState("decomposition factor is not pure".into()));
    }
    Ok(vecs.column(vals.len() - 1).into_owned())
}

/// `A[o, i] = v[2i + o]`.
fn unvec(v: &StateVector) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |o, i| v[2 * i + o])
}

/// A machine-checkable justification of a noise threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdCertificate {
    pub p_star: f64,
    pub split: Split,
    /// True when a constructive decomposition backs the PPT bound.
    pub tight: bool,
    pub lower_witness: Vec<PptSample>,
    pub upper_witness: Option<ProductDecomposition>,
    pub tolerance: f64,
    /// Twirl weights of the optimal noise, when the noise was optimized.
    pub noise_lambda: Option<Vec<f64>>,
}

impl ThresholdCertificate {
    pub fn label(&self) -> &'static str {
        if self.tight {
            "tight (constructive)"
        } else {
            "lower bound (PPT)"
        }
    }
}

// ---------------------------------------------------------------------------
// Split thresholds

fn pt_projectors(basis: &EigenBasis, split: Split) -> Result<Vec<ComplexMatrix>> {
    basis
        .projectors
        .iter()
        .map(|p| split.partial_transpose(p))
        .collect()
}

/// `max_λ λ_min[((1−p) P₀ + p Σ λ_e P_e)^Γ]` over probability vectors `λ`.
fn best_noise(p: f64, pts: &[ComplexMatrix], seeds: &[StateVector]) -> Result<(f64, Vec<f64>)> {
    let base = pts[0].scale(1.0 - p);
    let terms: Vec<ComplexMatrix> = pts.iter().map(|m| m.scale(p)).collect();
    let sol = eigen_cut_lp(&base, &terms, &[0.0; 16], 1.0, -1.0, seeds, 1e-12)?;
    Ok((sol.min_eigenvalue, sol.x))
}

/// Largest weight on `|e=0⟩` among twirl-invariant states that are PPT
/// across `split`.
pub fn lambda0_opt(u: &ComplexMatrix, split: Split) -> Result<f64> {
    let g = symmetry_group(u)?;
    let basis = eigenprojectors(&g);
    let pts = pt_projectors(&basis, split)?;
    let mut objective = [0.0; 16];
    objective[0] = 1.0;
    let sol = eigen_cut_lp(
        &ComplexMatrix::zeros(16, 16),
        &pts,
        &objective,
        0.0,
        0.0,
        basis.vectors(),
        1e-12,
    )?;
    Ok(sol.x[0])
}

/// Dictionary of pure products of two-qubit stabilizer states across a split.
pub fn product_dictionary(split: Split) -> Result<Vec<(ComplexMatrix, ComplexMatrix, ComplexMatrix)>> {
    let stab = stabilizer_projectors(2);
    let mut out = Vec::with_capacity(stab.len() * stab.len());
    for l in &stab {
        for r in &stab {
            out.push((split.assemble(l, r)?, l.clone(), r.clone()));
        }
    }
    Ok(out)
}

fn try_product_decomposition(target: &ComplexMatrix, splits: &[Split], extra: usize) -> Result<(ProductDecomposition, f64)> {
    let mut atoms = Vec::new();
    let mut parts = Vec::new();
    for &split in splits {
        for (full, l, r) in product_dictionary(split)? {
            atoms.push(full);
            parts.push((split, l, r));
        }
        if extra > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ split as u64);
            for _ in 0..extra {
                let l = outer(&crate::random::haar_state(4, &mut rng));
                let r = outer(&crate::random::haar_state(4, &mut rng));
                atoms.push(split.assemble(&l, &r)?);
                parts.push((split, l, r));
            }
        }
    }
    let d = decompose(target, &atoms)?;
    let terms = d
        .terms
        .iter()
        .map(|&(k, w)| ProductTerm {
            weight: w,
            split: parts[k].0,
            left: parts[k].1.clone(),
            right: parts[k].2.clone(),
        })
        .collect();
    Ok((ProductDecomposition { terms }, d.error))
}

/// Minimal generic noise turning `u` into a state PPT across `split`.
pub fn split_threshold(u: &ComplexMatrix, split: Split, tol: f64) -> Result<ThresholdCertificate> {
    split.sides()?;
    let g = symmetry_group(u)?;
    let basis = eigenprojectors(&g);
    let pts = pt_projectors(&basis, split)?;
    let seeds = basis.vectors().to_vec();
    let mut trace = Vec::new();

    let (f0, lam0) = best_noise(0.0, &pts, &seeds)?;
    trace.push(PptSample { p: 0.0, min_pt_eigenvalue: f0 });
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = lam0;
    if f0 < -PPT_TOL {
        let (f1, lam1) = best_noise(1.0, &pts, &seeds)?;
        trace.push(PptSample { p: 1.0, min_pt_eigenvalue: f1 });
        best = lam1;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let (f, lam) = best_noise(mid, &pts, &seeds)?;
            trace.push(PptSample { p: mid, min_pt_eigenvalue: f });
            if f >= -PPT_TOL {
                hi = mid;
                best = lam;
            } else {
                lo = mid;
            }
        }
    } else {
        hi = 0.0;
    }
    let p_star = hi;
    let mut lambda = best.iter().map(|&x| x * p_star).collect::<Vec<_>>();
    lambda[0] += 1.0 - p_star;
    let target = basis.combine(&lambda);
    let (decomp, err) = try_product_decomposition(&target, &[split], 0)?;
    let tight = err < DECOMPOSITION_TOL;
    Ok(ThresholdCertificate {
        p_star,
        split,
        tight,
        lower_witness: trace,
        upper_witness: tight.then_some(decomp),
        tolerance: tol,
        noise_lambda: Some(best),
    })
}

/// Boundary `p` at which `(1−p)²Φ_d + p² I/d²` (renormalized) stops being
/// entangled: `√d / (1 + √d)`.
pub fn isotropic_threshold(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidMatrix(format!("dimension {d} < 2")));
    }
    let s = (d as f64).sqrt();
    Ok(s / (1.0 + s))
}

// ---------------------------------------------------------------------------
// Depolarized CNOT

/// `(1−p)²U + p(1−p)(D⊗I)U + p(1−p)(I⊗D)U + p²D⊗D` for `U = CNOT`.
pub fn depolarized_cnot(p: f64) -> Result<channels::Channel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let noise = channels::mix(p, &channels::identity_channel(1), &channels::depolarize(1))?;
    channels::cnot().then(&noise.tensor(&noise))
}

/// The four product pure states whose equal mixture is `ρ((D⊗I)·CNOT)`,
/// ordered `A1 B1 A2 B2`.
pub fn central_states() -> Vec<StateVector> {
    let s = 1.0 / 2f64.sqrt();
    let bell = |odd: bool| {
        let mut v = StateVector::zeros(4);
        if odd {
            v[1] = real(s);
            v[2] = real(s);
        } else {
            v[0] = real(s);
            v[3] = real(s);
        }
        v
    };
    let mut out = Vec::new();
    for a1 in 0..2 {
        for b1 in 0..2 {
            let head = qmath::basis_state(2, 2 * a1 + b1);
            out.push(head.kronecker(&bell(a1 == 1)));
        }
    }
    out
}

/// Kraus pairs of `(D⊗I)·CNOT` and `(I⊗D)·CNOT`, each scaled for an equal
/// mixture of the two.
pub fn central_kraus_pairs() -> Vec<KrausPair> {
    let s = 0.5;
    let x = Pauli::X.matrix();
    let z = Pauli::Z.matrix();
    let h = gates::hadamard();
    let ket_bra = |y: usize, xx: usize| {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(y, xx)] = ONE;
        m
    };
    let pow = |m: &ComplexMatrix, k: usize| if k == 0 { identity(2) } else { m.clone() };
    let mut pairs = Vec::new();
    for xx in 0..2 {
        for y in 0..2 {
            pairs.push(KrausPair { a: ket_bra(y, xx).scale(s), b: pow(&x, xx) });
        }
    }
    for xx in 0..2 {
        for y in 0..2 {
            let hb = &h * ket_bra(y, xx) * &h;
            pairs.push(KrausPair { a: pow(&z, xx), b: hb.scale(s) });
        }
    }
    pairs
}

/// Result of checking the three ingredients of the depolarized-CNOT bound.
#[derive(Clone, Debug)]
pub struct CnotDepolarizingReport {
    pub p: f64,
    /// `‖ρ((D⊗I)U) − ¼Σ|ψ_k⟩⟨ψ_k|‖_max` for the four listed states.
    pub central_mixture_error: f64,
    /// Largest second Schmidt probability of the four states across S.
    pub central_schmidt_residual: f64,
    /// `‖ρ((I⊗D)U) − SWAP₁₂[H⊗⁴ ρ((D⊗I)U) H⊗⁴]‖_max`.
    pub mirror_error: f64,
    /// Min PT eigenvalue of the normalized outer terms across EB.
    pub outer_min_pt: f64,
    pub valid: bool,
    pub certificate: Option<ThresholdCertificate>,
}

fn outer_state(p: f64) -> Result<ComplexMatrix> {
    let a = (1.0 - p).powi(2);
    let b = p * p;
    let u = choi_of_unitary(&gates::cnot(), 2)?;
    Ok((u.matrix().scale(a) + identity(16).scale(b / 16.0)).scale(1.0 / (a + b)))
}

fn central_checks() -> Result<(f64, f64, f64)> {
    let dep = channels::depolarize(1);
    let id = channels::identity_channel(1);
    let d_i = channels::cnot().then(&dep.tensor(&id))?;
    let i_d = channels::cnot().then(&id.tensor(&dep))?;
    // states are ordered A1 B1 A2 B2; reorder to A1 A2 B1 B2.
    let to_canonical = [0, 2, 1, 3];
    let mix = central_states()
        .iter()
        .fold(ComplexMatrix::zeros(16, 16), |acc, s| acc + outer(s))
        .scale(0.25);
    let mix = permute_qubits(&mix, 4, &to_canonical);
    let central_mixture_error = max_abs_diff(&mix, d_i.choi().matrix());

    let s_split = BipartiteSplit::new(&["A1", "B1"], &["A2", "B2"])?;
    let ordered = qmath::labels(&["A1", "B1", "A2", "B2"]);
    let mut schmidt: f64 = 0.0;
    for s in central_states() {
        let probs = qmath::schmidt_probabilities(&s, &ordered, &s_split)?;
        schmidt = schmidt.max(probs[1]);
    }

    let h4 = (0..4).fold(identity(1), |acc, _| kron(&acc, &gates::hadamard()));
    let rotated = &h4 * d_i.choi().matrix() * &h4;
    let swapped = permute_qubits(&rotated, 4, &[1, 0, 3, 2]);
    let mirror_error = max_abs_diff(&swapped, i_d.choi().matrix());
    Ok((central_mixture_error, schmidt, mirror_error))
}

/// Explicit EB decomposition of the normalized outer state at `p ≥ 2/3`:
/// the stabilizer 2-design `{φ_k ⊗ Uφ_k*}` plus the maximally mixed term.
fn outer_decomposition(p: f64) -> Result<(ProductDecomposition, f64)> {
    let target = outer_state(p)?;
    let u = gates::cnot();
    let mut atoms = Vec::new();
    let mut parts = Vec::new();
    for phi in stabilizer_states(2) {
        let conj = &u * phi.map(|z| z.conj());
        let (l, r) = (outer(&phi), outer(&conj));
        atoms.push(Split::EB.assemble(&l, &r)?);
        parts.push((l, r));
    }
    let mixed = identity(4).scale(0.25);
    atoms.push(identity(16).scale(1.0 / 16.0));
    parts.push((mixed.clone(), mixed));
    let d = decompose(&target, &atoms)?;
    let terms = d
        .terms
        .iter()
        .map(|&(k, w)| ProductTerm {
            weight: w,
            split: Split::EB,
            left: parts[k].0.clone(),
            right: parts[k].1.clone(),
        })
        .collect();
    Ok((ProductDecomposition { terms }, d.error))
}

/// Full bi-entangling decomposition of the depolarized CNOT at `p`.
pub fn cnot_depolarizing_decomposition(p: f64) -> Result<ProductDecomposition> {
    let (outer_part, err) = outer_decomposition(p)?;
    if err > DECOMPOSITION_TOL {
        return Err(Error::InvalidChannel(format!(
            "no EB decomposition of the outer terms at p = {p} (error {err:.3e})"
        )));
    }
    let outer_weight = (1.0 - p).powi(2) + p * p;
    let central_weight = p * (1.0 - p);
    let mut terms: Vec<ProductTerm> = outer_part
        .terms
        .into_iter()
        .map(|mut t| {
            t.weight *= outer_weight;
            t
        })
        .collect();
    if central_weight > 0.0 {
        // (D⊗I)U: four product states across S.
        let h2 = kron(&gates::hadamard(), &gates::hadamard());
        for (k, s) in central_states().into_iter().enumerate() {
            let head = qmath::basis_state(2, k);
            let tail = s.rows(4 * k, 4).into_owned();
            let (l, r) = (outer(&head), outer(&tail));
            terms.push(ProductTerm {
                weight: central_weight / 4.0,
                split: Split::S,
                left: l.clone(),
                right: r.clone(),
            });
            // (I⊗D)U mirror: swap the roles of the two product factors and
            // rotate every qubit by H.
            terms.push(ProductTerm {
                weight: central_weight / 4.0,
                split: Split::S,
                left: &h2 * r * &h2,
                right: &h2 * l * &h2,
            });
        }
    }
    Ok(ProductDecomposition { terms })
}

/// Checks the depolarized-CNOT argument at `p` and, when the outer terms
/// are entanglement breaking, emits a bi-entangling certificate.
pub fn cnot_depolarizing_certificate(p: f64) -> Result<CnotDepolarizingReport> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    let (central_mixture_error, central_schmidt_residual, mirror_error) = central_checks()?;
    let outer_min_pt = split_min_pt(&outer_state(p)?, Split::EB)?;
    let valid = central_mixture_error < 1e-10
        && central_schmidt_residual < 1e-10
        && mirror_error < 1e-10
        && outer_min_pt >= -PPT_TOL;
    let certificate = if valid {
        let decomposition = cnot_depolarizing_decomposition(p).ok();
        let tight = match &decomposition {
            Some(d) => {
                let target = depolarized_cnot(p)?;
                d.verify(target.choi().matrix(), DECOMPOSITION_TOL).is_ok()
            }
            None => false,
        };
        Some(ThresholdCertificate {
            p_star: p,
            split: Split::BiEntangling,
            tight,
            lower_witness: vec![PptSample { p, min_pt_eigenvalue: outer_min_pt }],
            upper_witness: decomposition.filter(|_| tight),
            tolerance: DECOMPOSITION_TOL,
            noise_lambda: None,
        })
    } else {
        None
    };
    Ok(CnotDepolarizingReport {
        p,
        central_mixture_error,
        central_schmidt_residual,
        mirror_error,
        outer_min_pt,
        valid,
        certificate,
    })
}

/// Smallest `p` for which the depolarized-CNOT certificate is valid, by
/// bisection on the outer-term PPT value.
pub fn cnot_depolarizing_threshold(tol: f64) -> Result<ThresholdCertificate> {
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::InvalidProbability(tol));
    }
    let mut trace = Vec::new();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = split_min_pt(&outer_state(mid)?, Split::EB)?;
        trace.push(PptSample { p: mid, min_pt_eigenvalue: v });
        if v >= -PPT_TOL {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let report = cnot_depolarizing_certificate(hi)?;
    let mut cert = report.certificate.ok_or_else(|| {
        Error::InvalidChannel("certificate rejected at the bisection boundary".into())
    })?;
    trace.extend(cert.lower_witness.drain(..));
    cert.lower_witness = trace;
    cert.tolerance = tol.max(DECOMPOSITION_TOL);
    Ok(cert)
}

/// Replays a depolarized-CNOT certificate against a freshly built channel.
pub fn verify_cnot_certificate(cert: &ThresholdCertificate) -> Result<f64> {
    let report = cnot_depolarizing_certificate(cert.p_star)?;
    if !report.valid {
        return Err(Error::InvalidChannel(format!(
            "outer terms not PPT at p = {} (min eigenvalue {:.3e})",
            cert.p_star, report.outer_min_pt
        )));
    }
    match &cert.upper_witness {
        Some(d) => {
            let target = depolarized_cnot(cert.p_star)?;
            d.verify(target.choi().matrix(), DECOMPOSITION_TOL)
        }
        None => Ok(report.outer_min_pt),
    }
}

/// Executable gate for the depolarized CNOT at `p ≥ 2/3`: the central terms
/// as separable Kraus pairs and the outer terms as measure-prepare.
pub fn cnot_depolarizing_spec(p: f64) -> Result<BiEntanglingGateSpec> {
    let (outer_part, err) = outer_decomposition(p)?;
    if err > DECOMPOSITION_TOL || split_min_pt(&outer_state(p)?, Split::EB)? < -PPT_TOL {
        return Err(Error::InvalidChannel(format!(
            "depolarized CNOT is not certified bi-entangling at p = {p}"
        )));
    }
    let sep_w = 2.0 * p * (1.0 - p);
    let eb_w = 1.0 - sep_w;
    let eb = outer_part.to_gate_spec()?.eb().cloned();
    let spec = BiEntanglingGateSpec::new([sep_w, 0.0, eb_w], central_kraus_pairs(), Vec::new(), eb)?;
    spec.with_reference(depolarized_cnot(p)?.choi(), DECOMPOSITION_TOL)
}

// ---------------------------------------------------------------------------
// Membership in the bi-entangling hull

/// Outcome of [`bient_membership`].
#[derive(Clone, Debug)]
pub enum Membership {
    CertifiedIn {
        decomposition: ProductDecomposition,
        error: f64,
    },
    /// Twirling over the reference gate's local group gives more weight on
    /// its `e = 0` projector than any PPT state across any split allows.
    CertifiedOutByPpt {
        reference: &'static str,
        lambda0: f64,
        bound: f64,
    },
    Undecided {
        residual: f64,
    },
}

impl Membership {
    pub fn label(&self) -> &'static str {
        match self {
            Membership::CertifiedIn { .. } => "certified-in",
            Membership::CertifiedOutByPpt { .. } => "certified-out-by-PPT",
            Membership::Undecided { .. } => "undecided",
        }
    }
}

/// Clifford gates whose symmetry groups are local and serve as twirl
/// references.
pub fn reference_cliffords() -> Vec<(&'static str, ComplexMatrix)> {
    let cn = gates::cnot();
    let sw = gates::swap();
    vec![
        ("identity", identity(4)),
        ("cnot", cn.clone()),
        ("cnot_reversed", gates::cnot_reversed()),
        ("cz", gates::cz()),
        ("swap", sw.clone()),
        ("cnot_swap", &cn * &sw),
        ("swap_cnot", &sw * &cn),
        ("iswap", gates::iswap()),
    ]
}

/// Tries an explicit decomposition over `dictionary_size` split-product
/// atoms per split (stabilizer products first, then seeded random
/// products), then the twirl bound over reference Cliffords.
pub fn bient_membership(c: &ChoiState, dictionary_size: usize) -> Result<Membership> {
    if c.in_qubits() != 2 || c.out_qubits() != 2 {
        return Err(Error::InvalidChannel("membership needs a two-qubit channel".into()));
    }
    let stab = 3600;
    let extra = dictionary_size.saturating_sub(stab);
    let (decomp, err) = if dictionary_size >= stab {
        try_product_decomposition(c.matrix(), &Split::ALL, extra)?
    } else {
        truncated_decomposition(c.matrix(), dictionary_size)?
    };
    if err < DECOMPOSITION_TOL {
        return Ok(Membership::CertifiedIn {
            decomposition: decomp,
            error: err,
        });
    }
    for (name, u) in reference_cliffords() {
        let g = symmetry_group(&u)?;
        if !g.is_local() {
            continue;
        }
        let p0 = eigenprojectors(&g).projectors[0].clone();
        let lambda0 = qmath::hs_inner(&p0, c.matrix()).re;
        let mut bound: f64 = 0.0;
        for split in Split::ALL {
            bound = bound.max(lambda0_opt(&u, split)?);
        }
        if lambda0 > bound + PPT_TOL {
            return Ok(Membership::CertifiedOutByPpt {
                reference: name,
                lambda0,
                bound,
            });
        }
    }
    Ok(Membership::Undecided { residual: err })
}

fn truncated_decomposition(target: &ComplexMatrix, per_split: usize) -> Result<(ProductDecomposition, f64)> {
    let mut atoms = Vec::new();
    let mut parts = Vec::new();
    for split in Split::ALL {
        for (full, l, r) in product_dictionary(split)?.into_iter().take(per_split) {
            atoms.push(full);
            parts.push((split, l, r));
        }
    }
    let d = decompose(target, &atoms)?;
    let terms = d
        .terms
        .iter()
        .map(|&(k, w)| ProductTerm {
            weight: w,
            split: parts[k].0,
            left: parts[k].1.clone(),
            right: parts[k].2.clone(),
        })
        .collect();
    Ok((ProductDecomposition { terms }, d.error))
}

// ---------------------------------------------------------------------------
// The ω state

/// `½|GHZ⟩⟨GHZ|_{A1A2B1} ⊗ |0⟩⟨0|_{B2} + ½|GHZ′⟩⟨GHZ′|_{A1A2B1} ⊗ |1⟩⟨1|_{B2}`.
pub fn omega_state() -> ChoiState {
    let (ghz, ghz_p) = ghz_pair();
    let m = kron(&outer(&ghz), &gates::projector(0)).scale(0.5)
        + kron(&outer(&ghz_p), &gates::projector(1)).scale(0.5);
    ChoiState::from_matrix(m, 2, 2).expect("ω is a valid Choi state")
}

/// `(|000⟩ + |111⟩)/√2` and `(|011⟩ + |100⟩)/√2`.
pub fn ghz_pair() -> (StateVector, StateVector) {
    let s = real(1.0 / 2f64.sqrt());
    let mut ghz = StateVector::zeros(8);
    ghz[0] = s;
    ghz[7] = s;
    let mut ghz_p = StateVector::zeros(8);
    ghz_p[3] = s;
    ghz_p[4] = s;
    (ghz, ghz_p)
}

#[derive(Clone, Debug)]
pub struct OmegaReport {
    pub marginal_error: f64,
    /// `(probability, fidelity with GHZ / GHZ′)` for B2 outcomes 0 and 1.
    pub b2_outcomes: [(f64, f64); 2],
    /// `⟨I/2 − |G⟩⟨G|⟩` on each post-measurement state.
    pub ghz_witness: [f64; 2],
    pub product_inputs: usize,
    /// Smallest B1|B2 PT eigenvalue over the sampled outputs.
    pub min_output_pt: f64,
    pub membership: Membership,
}

impl OmegaReport {
    pub fn passes(&self) -> bool {
        self.marginal_error < 1e-9
            && self
                .b2_outcomes
                .iter()
                .all(|&(p, f)| (p - 0.5).abs() < 1e-12 && (f - 1.0).abs() < 1e-10)
            && self.min_output_pt >= -PPT_TOL
            && self.ghz_witness.iter().all(|&w| w < 0.0)
            && !matches!(self.membership, Membership::CertifiedIn { .. })
    }
}

/// Output of the ω channel on a two-qubit input.
pub fn omega_output(input: &ComplexMatrix) -> ComplexMatrix {
    omega_state().act(input)
}

pub fn omega_analysis(n_inputs: usize, seed: u64) -> Result<OmegaReport> {
    let omega = omega_state();
    let m = omega.matrix();
    let marginal = qmath::trace_out(m, 4, &[0, 1]);
    let marginal_error = max_abs_diff(&marginal, &identity(4).scale(0.25));

    let (ghz, ghz_p) = ghz_pair();
    let mut b2_outcomes = [(0.0, 0.0); 2];
    let mut ghz_witness = [0.0; 2];
    for (k, target) in [ghz, ghz_p].iter().enumerate() {
        let proj = kron(&identity(8), &gates::projector(k));
        let post = &proj * m * &proj;
        let prob = post.trace().re;
        let reduced = qmath::trace_out(&post, 4, &[0, 1, 2]).scale(1.0 / prob);
        let fid = (target.adjoint() * &reduced * target)[(0, 0)].re;
        b2_outcomes[k] = (prob, fid);
        let witness = identity(8).scale(0.5) - outer(target);
        ghz_witness[k] = qmath::hs_inner(&witness, &reduced).re;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_output_pt = f64::INFINITY;
    for _ in 0..n_inputs {
        let input = outer(&crate::random::product_state(2, &mut rng));
        let out = omega.act(&input);
        min_output_pt = min_output_pt.min(min_eigenvalue(&transpose_qubits(&out, 2, &[1])));
    }
    let membership = bient_membership(&omega, 3600)?;
    Ok(OmegaReport {
        marginal_error,
        b2_outcomes,
        ghz_witness,
        product_inputs: n_inputs,
        min_output_pt,
        membership,
    })
}

// ---------------------------------------------------------------------------
// Measurements

#[derive(Clone, Debug)]
pub struct EbCheck {
    pub is_eb: bool,
    /// First POVM element that is not a rank-1 projector.
    pub offending: Option<usize>,
    /// Measure-prepare Choi as `Σ (1/4) M_kᵀ ⊗ ρ_k`, when `is_eb`.
    pub decomposition: Option<ProductDecomposition>,
}

/// Rank-1 projective measurements followed by any repreparation are
/// entanglement breaking; a degenerate projector leaves the post-measurement
/// state undetermined by the outcome and is reported.
pub fn nondegenerate_measurement_is_eb(mp: &MeasurePrepare) -> Result<EbCheck> {
    if mp.in_dim() != 4 || mp.out_dim() != 4 {
        return Err(Error::InvalidChannel("expected a two-qubit measurement".into()));
    }
    for (k, m) in mp.povm().iter().enumerate() {
        if max_abs_diff(&(m * m), m) > 1e-9 {
            return Err(Error::InvalidChannel(format!("POVM element {k} is not a projector")));
        }
    }
    for (k, m) in mp.povm().iter().enumerate() {
        let rank = m.trace().re.round() as i64;
        if rank != 1 {
            return Ok(EbCheck {
                is_eb: false,
                offending: Some(k),
                decomposition: None,
            });
        }
    }
    let terms = mp
        .povm()
        .iter()
        .zip(mp.prepared())
        .map(|(m, rho)| ProductTerm {
            weight: 0.25,
            split: Split::EB,
            left: m.transpose(),
            right: rho.matrix().clone(),
        })
        .collect();
    let decomposition = ProductDecomposition { terms };
    decomposition.verify(mp.choi().matrix(), 1e-10)?;
    Ok(EbCheck {
        is_eb: true,
        offending: None,
        decomposition: Some(decomposition),
    })
}

/// `ρ ↦ Σ_k P_k ρ P_k` for a projective measurement.
pub fn luders_channel(projectors: &[ComplexMatrix]) -> Result<channels::Channel> {
    Ok(channels::Channel::from_kraus(&channels::KrausSet::new(projectors.to_vec())?))
}

/// Bell-basis projectors `Φ+, Φ−, Ψ+, Ψ−`.
pub fn bell_projectors() -> Vec<ComplexMatrix> {
    let s = 1.0 / 2f64.sqrt();
    let v = |a: usize, b: usize, sign: f64| {
        let mut x = StateVector::zeros(4);
        x[a] = real(s);
        x[b] = real(sign * s);
        outer(&x)
    };
    vec![v(0, 3, 1.0), v(0, 3, -1.0), v(1, 2, 1.0), v(1, 2, -1.0)]
}
