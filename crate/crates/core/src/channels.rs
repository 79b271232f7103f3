//! Quantum operations.
//!
//! The canonical representation is the Choi state with trace-1 normalization,
//! `C = (1/d_in) Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input factors labelled `A1..Ak` and
//! output factors `B1..Bk` (inputs first). Kraus operators and Pauli transfer
//! matrices are derived views.

use std::fmt;

use log::warn;
use nalgebra::DMatrix;

use crate::qmath::{
    self, c, conjugate_on, eigh, hermitian_part, identity, kron, max_abs_diff, min_eigenvalue,
    pauli_expand_matrix, qubit_count, real, transpose_qubits, trace_out, ComplexMatrix,
    DensityMatrix, Pauli, PauliString, C64, ONE, ZERO,
};
use crate::{Error, Result};

/// Tolerance for trace preservation and POVM completeness.
pub const CPTP_TOL: f64 = 1e-9;
/// Tolerance on unitarity of gate matrices.
pub const UNITARY_TOL: f64 = 1e-10;
/// Choi eigenvalues below this are discarded when extracting Kraus operators.
pub const KRAUS_DROP: f64 = 1e-10;
/// Discarded eigenvalues above this trigger a warning.
pub const KRAUS_WARN: f64 = 1e-7;

/// Labels `A1..Ak, B1..Bm` of a Choi state.
pub fn choi_labels(in_qubits: usize, out_qubits: usize) -> Vec<String> {
    (1..=in_qubits)
        .map(|k| format!("A{k}"))
        .chain((1..=out_qubits).map(|k| format!("B{k}")))
        .collect()
}

/// A channel's Jamiolkowski state.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiState {
    state: DensityMatrix,
    in_qubits: usize,
    out_qubits: usize,
}

impl ChoiState {
    /// Wraps a matrix ordered as (inputs, outputs), checking positivity and
    /// the maximally mixed input marginal.
    pub fn from_matrix(m: ComplexMatrix, in_qubits: usize, out_qubits: usize) -> Result<Self> {
        let state = DensityMatrix::new(m, choi_labels(in_qubits, out_qubits))
            .map_err(|e| Error::InvalidChannel(format!("Choi state: {e}")))?;
        let choi = ChoiState {
            state,
            in_qubits,
            out_qubits,
        };
        choi.check_marginal()?;
        Ok(choi)
    }

    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix, in_qubits: usize, out_qubits: usize) -> Self {
        ChoiState {
            state: DensityMatrix::new_unchecked(m, choi_labels(in_qubits, out_qubits)),
            in_qubits,
            out_qubits,
        }
    }

    fn check_marginal(&self) -> Result<()> {
        let keep: Vec<usize> = (0..self.in_qubits).collect();
        let n = self.in_qubits + self.out_qubits;
        let marginal = trace_out(self.matrix(), n, &keep);
        let din = self.in_dim();
        let err = max_abs_diff(&marginal, &identity(din).scale(1.0 / din as f64));
        if err > CPTP_TOL {
            return Err(Error::InvalidChannel(format!(
                "input marginal deviates from I/{din} by {err:.3e}"
            )));
        }
        Ok(())
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.state.matrix()
    }

    pub fn in_qubits(&self) -> usize {
        self.in_qubits
    }

    pub fn out_qubits(&self) -> usize {
        self.out_qubits
    }

    pub fn in_dim(&self) -> usize {
        1 << self.in_qubits
    }

    pub fn out_dim(&self) -> usize {
        1 << self.out_qubits
    }

    /// `E(X) = d_in · Tr_A[(Xᵀ ⊗ I) C]`.
    pub fn act(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let cm = self.matrix();
        let mut out = ComplexMatrix::zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                // block (i, j) of C is E(|i⟩⟨j|)/d_in
                let xij = x[(i, j)];
                if xij == ZERO {
                    continue;
                }
                for a in 0..dout {
                    for b in 0..dout {
                        out[(a, b)] += xij * cm[(i * dout + a, j * dout + b)];
                    }
                }
            }
        }
        out.scale(din as f64)
    }
}

/// Kraus operators `K_j` (`out_dim × in_dim`) with `Σ K†K = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus set".into()))?;
        let (dout, din) = first.shape();
        qubit_count(din)?;
        qubit_count(dout)?;
        if ops.iter().any(|k| k.shape() != (dout, din)) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        let sum = ops
            .iter()
            .fold(ComplexMatrix::zeros(din, din), |acc, k| acc + k.adjoint() * k);
        let err = max_abs_diff(&sum, &identity(din));
        if err > CPTP_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus operators not trace preserving (deviation {err:.3e})"
            )));
        }
        Ok(KrausSet { ops })
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn in_dim(&self) -> usize {
        self.ops[0].ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// A POVM followed by conditional state preparation.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurePrepare {
    povm: Vec<ComplexMatrix>,
    prepared: Vec<DensityMatrix>,
}

impl MeasurePrepare {
    pub fn new(povm: Vec<ComplexMatrix>, prepared: Vec<DensityMatrix>) -> Result<Self> {
        if povm.is_empty() || povm.len() != prepared.len() {
            return Err(Error::InvalidChannel(format!(
                "{} POVM elements but {} prepared states",
                povm.len(),
                prepared.len()
            )));
        }
        let din = povm[0].nrows();
        qubit_count(din)?;
        let dout = prepared[0].dim();
        if prepared.iter().any(|r| r.dim() != dout) {
            return Err(Error::InvalidChannel("prepared states differ in size".into()));
        }
        let mut sum = ComplexMatrix::zeros(din, din);
        for (k, m) in povm.iter().enumerate() {
            if m.shape() != (din, din) {
                return Err(Error::InvalidChannel(format!("POVM element {k} has wrong shape")));
            }
            if qmath::hermiticity_error(m) > CPTP_TOL {
                return Err(Error::InvalidChannel(format!("POVM element {k} not Hermitian")));
            }
            let lo = min_eigenvalue(m);
            if lo < -CPTP_TOL {
                return Err(Error::InvalidChannel(format!(
                    "POVM element {k} has eigenvalue {lo:.3e}"
                )));
            }
            sum += m;
        }
        let err = max_abs_diff(&sum, &identity(din));
        if err > CPTP_TOL {
            return Err(Error::InvalidChannel(format!(
                "POVM does not sum to identity (deviation {err:.3e})"
            )));
        }
        Ok(MeasurePrepare { povm, prepared })
    }

    pub fn povm(&self) -> &[ComplexMatrix] {
        &self.povm
    }

    pub fn prepared(&self) -> &[DensityMatrix] {
        &self.prepared
    }

    pub fn len(&self) -> usize {
        self.povm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povm.is_empty()
    }

    pub fn in_dim(&self) -> usize {
        self.povm[0].nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.prepared[0].dim()
    }

    /// `(1/d) Σ_k M_kᵀ ⊗ ρ_k`.
    pub fn choi(&self) -> ChoiState {
        let d = self.in_dim();
        let m = self
            .povm
            .iter()
            .zip(&self.prepared)
            .fold(ComplexMatrix::zeros(d * self.out_dim(), d * self.out_dim()), |acc, (mk, rk)| {
                acc + kron(&mk.transpose(), rk.matrix())
            })
            .scale(1.0 / d as f64);
        ChoiState::from_matrix_unchecked(
            m,
            qubit_count(d).unwrap(),
            qubit_count(self.out_dim()).unwrap(),
        )
    }

    /// Kraus form `√p_s |ψ_s⟩⟨m_l|` from spectral decompositions of `M_k`
    /// and `ρ_k`.
    pub fn kraus_ops(&self) -> Vec<ComplexMatrix> {
        let mut ops = Vec::new();
        for (mk, rk) in self.povm.iter().zip(&self.prepared) {
            let (mv, mvec) = eigh(mk);
            let (rv, rvec) = eigh(rk.matrix());
            for (l, &ml) in mv.iter().enumerate() {
                if ml <= KRAUS_DROP {
                    continue;
                }
                let bra = mvec.column(l).adjoint() * real(ml.sqrt());
                for (s, &ps) in rv.iter().enumerate() {
                    if ps <= KRAUS_DROP {
                        continue;
                    }
                    let ket = rvec.column(s) * real(ps.sqrt());
                    ops.push(&ket * &bra);
                }
            }
        }
        ops
    }
}

/// Pauli transfer matrix `T_PQ = (1/2ⁿ) Tr[P E(Q)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ptm {
    n_qubits: usize,
    matrix: DMatrix<f64>,
}

impl Ptm {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() || dim == 0 || !dim.is_power_of_two() || dim.trailing_zeros() % 2 != 0 {
            return Err(Error::InvalidMatrix(format!("PTM of shape {:?}", matrix.shape())));
        }
        let first_row_err = (0..dim)
            .map(|j| (matrix[(0, j)] - if j == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if first_row_err > CPTP_TOL {
            return Err(Error::InvalidChannel(format!(
                "PTM first row deviates from trace preservation by {first_row_err:.3e}"
            )));
        }
        Ok(Ptm {
            n_qubits: (dim.trailing_zeros() / 2) as usize,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.matrix.ncols());
        (0..self.matrix.nrows())
            .map(|i| (0..r.len()).map(|j| self.matrix[(i, j)] * r[j]).sum())
            .collect()
    }

    /// PTM of `other ∘ self` (self applied first).
    pub fn then(&self, other: &Ptm) -> Ptm {
        Ptm {
            n_qubits: self.n_qubits,
            matrix: &other.matrix * &self.matrix,
        }
    }
}

/// Real matrix `T_PQ = (1/2ⁿ) Σ_j Tr[P K_j Q K_j†]` for any operator list.
/// For a trace-preserving set this is the PTM; for a single Kraus operator it
/// is the (unnormalized) conditional update used by the simulator.
pub fn transfer_matrix(ops: &[ComplexMatrix]) -> DMatrix<f64> {
    let d = ops[0].nrows();
    let n = qubit_count(d).expect("power-of-two dimension");
    let basis = qmath::pauli_basis(n);
    let dim = basis.len();
    let mut t = DMatrix::<f64>::zeros(dim, dim);
    for (q, pq) in basis.iter().enumerate() {
        let qm = pq.matrix();
        let image = ops
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k * &qm * k.adjoint());
        let col = pauli_expand_matrix(&image);
        for (p, v) in col.into_iter().enumerate() {
            t[(p, q)] = v / d as f64;
        }
    }
    t
}

/// An immutable quantum channel: Choi state plus a cached Kraus form.
#[derive(Clone, Debug)]
pub struct Channel {
    choi: ChoiState,
    kraus: Vec<ComplexMatrix>,
    name: Option<String>,
}

impl PartialEq for Channel {
    fn eq(&self, other: &Self) -> bool {
        self.choi == other.choi
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.name {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "channel({}→{} qubits)", self.choi.in_qubits, self.choi.out_qubits),
        }
    }
}

impl Channel {
    pub fn from_kraus(k: &KrausSet) -> Self {
        let choi = choi_from_kraus(k);
        let din = k.in_dim();
        let dout = k.out_dim();
        let kraus = if k.len() > din * dout {
            kraus_from_choi(&choi).expect("valid Choi").ops
        } else {
            k.ops.clone()
        };
        Channel { choi, kraus, name: None }
    }

    pub fn from_choi(choi: ChoiState) -> Result<Self> {
        let kraus = kraus_from_choi(&choi)?.ops;
        Ok(Channel { choi, kraus, name: None })
    }

    pub fn from_measure_prepare(mp: &MeasurePrepare) -> Self {
        let choi = mp.choi();
        let ops = mp.kraus_ops();
        let kraus = if ops.len() > mp.in_dim() * mp.out_dim() {
            kraus_from_choi(&choi).expect("valid Choi").ops
        } else {
            ops
        };
        Channel { choi, kraus, name: None }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn choi(&self) -> &ChoiState {
        &self.choi
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn kraus_set(&self) -> KrausSet {
        KrausSet { ops: self.kraus.clone() }
    }

    pub fn in_qubits(&self) -> usize {
        self.choi.in_qubits
    }

    pub fn out_qubits(&self) -> usize {
        self.choi.out_qubits
    }

    /// Same number of input and output qubits.
    pub fn arity(&self) -> Option<usize> {
        (self.choi.in_qubits == self.choi.out_qubits).then_some(self.choi.in_qubits)
    }

    /// Action on a matrix over exactly the channel's input space.
    pub fn act(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let dout = self.choi.out_dim();
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(dout, dout), |acc, k| acc + k * x * k.adjoint())
    }

    /// Embedded action on qubit positions `targets` of an `n`-qubit matrix.
    pub fn act_on(&self, m: &ComplexMatrix, n: usize, targets: &[usize]) -> Result<ComplexMatrix> {
        let arity = self.arity().ok_or_else(|| {
            Error::InvalidChannel("embedded action needs equal input and output size".into())
        })?;
        if targets.len() != arity {
            return Err(Error::ArityMismatch {
                expected: arity,
                got: targets.len(),
            });
        }
        let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
        for k in &self.kraus {
            out += conjugate_on(k, m, n, targets);
        }
        Ok(out)
    }

    /// Applies the channel on the labelled `targets` of `rho`.
    pub fn apply<S: AsRef<str>>(&self, rho: &DensityMatrix, targets: &[S]) -> Result<DensityMatrix> {
        let positions = rho.positions(targets)?;
        let out = self.act_on(rho.matrix(), rho.n_qubits(), &positions)?;
        DensityMatrix::new(hermitian_part(&out), rho.labels().to_vec())
    }

    pub fn ptm(&self) -> Result<Ptm> {
        if self.arity().is_none() {
            return Err(Error::InvalidChannel("PTM needs equal input and output size".into()));
        }
        Ptm::new(transfer_matrix(&self.kraus))
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Channel) -> Result<Channel> {
        if self.out_qubits() != other.in_qubits() {
            return Err(Error::ArityMismatch {
                expected: self.out_qubits(),
                got: other.in_qubits(),
            });
        }
        let ops = other
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Ok(Channel::from_kraus(&KrausSet { ops }))
    }

    /// `self ⊗ other` on (self's qubits, other's qubits).
    pub fn tensor(&self, other: &Channel) -> Channel {
        let ops = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| kron(a, b)))
            .collect();
        Channel::from_kraus(&KrausSet { ops })
    }
}

/// Pure Choi state of a unitary on `parties` qubits.
pub fn choi_of_unitary(u: &ComplexMatrix, parties: usize) -> Result<ChoiState> {
    check_unitary(u, parties)?;
    Ok(choi_from_kraus(&KrausSet { ops: vec![u.clone()] }))
}

fn check_unitary(u: &ComplexMatrix, parties: usize) -> Result<()> {
    if u.nrows() != 1 << parties || !u.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "expected a {0}×{0} unitary, got {1}×{2}",
            1 << parties,
            u.nrows(),
            u.ncols()
        )));
    }
    let err = qmath::unitarity_error(u);
    if err > UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    Ok(())
}

/// Vectorization `|K⟩⟩` with index `i·d_out + o` holding `K[o, i]`.
pub fn vectorize(k: &ComplexMatrix) -> qmath::StateVector {
    let (dout, din) = k.shape();
    qmath::StateVector::from_fn(din * dout, |idx, _| k[(idx % dout, idx / dout)])
}

pub fn choi_from_kraus(k: &KrausSet) -> ChoiState {
    let din = k.in_dim();
    let dim = din * k.out_dim();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for op in &k.ops {
        let v = vectorize(op);
        m += &v * v.adjoint();
    }
    ChoiState::from_matrix_unchecked(
        hermitian_part(&m).scale(1.0 / din as f64),
        qubit_count(din).unwrap(),
        qubit_count(k.out_dim()).unwrap(),
    )
}

/// Kraus operators `K_j[o,i] = √(d λ_j) v_j[i·d_out + o]` from the Choi
/// spectrum.
pub fn kraus_from_choi(c: &ChoiState) -> Result<KrausSet> {
    let (din, dout) = (c.in_dim(), c.out_dim());
    let (vals, vecs) = eigh(c.matrix());
    let mut ops = Vec::new();
    for (j, &lam) in vals.iter().enumerate() {
        if lam < KRAUS_DROP {
            continue;
        }
        if lam < KRAUS_WARN {
            warn!("keeping small Choi eigenvalue {lam:.3e}; channel may carry round-off");
        }
        let scale = (din as f64 * lam).sqrt();
        let v = vecs.column(j);
        ops.push(ComplexMatrix::from_fn(dout, din, |o, i| v[i * dout + o] * scale));
    }
    KrausSet::new(ops)
}

/// `(1 − p)·ideal + p·noise` at the Choi level.
pub fn mix(p: f64, ideal: &Channel, noise: &Channel) -> Result<Channel> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    if ideal.in_qubits() != noise.in_qubits() || ideal.out_qubits() != noise.out_qubits() {
        return Err(Error::ArityMismatch {
            expected: ideal.in_qubits(),
            got: noise.in_qubits(),
        });
    }
    if p == 0.0 {
        return Ok(ideal.clone());
    }
    if p == 1.0 {
        return Ok(noise.clone());
    }
    mixture(&[(1.0 - p, ideal), (p, noise)])
}

/// Convex combination `Σ w_i E_i`; weights must be a probability vector.
pub fn mixture(terms: &[(f64, &Channel)]) -> Result<Channel> {
    let total: f64 = terms.iter().map(|t| t.0).sum();
    if terms.iter().any(|t| t.0 < 0.0) || (total - 1.0).abs() > CPTP_TOL {
        return Err(Error::InvalidProbability(total));
    }
    let (first, rest) = terms
        .split_first()
        .ok_or_else(|| Error::InvalidChannel("empty mixture".into()))?;
    if rest
        .iter()
        .any(|t| t.1.in_qubits() != first.1.in_qubits() || t.1.out_qubits() != first.1.out_qubits())
    {
        return Err(Error::InvalidChannel("mixture of channels of different size".into()));
    }
    let ops: Vec<ComplexMatrix> = terms
        .iter()
        .filter(|t| t.0 > 0.0)
        .flat_map(|(w, ch)| ch.kraus.iter().map(move |k| k * real(w.sqrt())))
        .collect();
    Ok(Channel::from_kraus(&KrausSet { ops }))
}

// ---------------------------------------------------------------------------
// Standard gates and noise

pub fn unitary(u: &ComplexMatrix) -> Result<Channel> {
    let n = qubit_count(u.nrows())?;
    check_unitary(u, n)?;
    Ok(Channel::from_kraus(&KrausSet { ops: vec![u.clone()] }))
}

fn gate(u: ComplexMatrix, name: &str) -> Channel {
    Channel::from_kraus(&KrausSet { ops: vec![u] }).named(name)
}

pub fn identity_channel(n_qubits: usize) -> Channel {
    gate(identity(1 << n_qubits), "identity")
}

/// `ρ ↦ Tr(ρ) I/2ⁿ`.
pub fn depolarize(n_qubits: usize) -> Channel {
    let scale = real(1.0 / (1u64 << n_qubits) as f64);
    let ops = qmath::pauli_basis(n_qubits)
        .iter()
        .map(|p| p.matrix() * scale)
        .collect();
    Channel::from_kraus(&KrausSet { ops }).named("depolarize")
}

/// Complete dephasing in the computational basis.
pub fn dephase() -> Channel {
    let p0 = gates::projector(0);
    let p1 = gates::projector(1);
    Channel::from_kraus(&KrausSet { ops: vec![p0, p1] }).named("dephase")
}

/// `ρ ↦ Σ_P w_P P ρ P` over all `4ⁿ` Pauli strings in lexicographic order.
pub fn pauli_channel(weights: &[f64]) -> Result<Channel> {
    let n4 = weights.len();
    if n4 == 0 || !n4.is_power_of_two() || n4.trailing_zeros() % 2 != 0 {
        return Err(Error::InvalidChannel(format!("{n4} Pauli weights")));
    }
    if let Some(&w) = weights.iter().find(|w| !(**w >= -CPTP_TOL)) {
        return Err(Error::InvalidProbability(w));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > CPTP_TOL {
        return Err(Error::InvalidProbability(total));
    }
    let n = (n4.trailing_zeros() / 2) as usize;
    let ops = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| PauliString::from_index(k, n).matrix() * real(w.sqrt()))
        .collect();
    Ok(Channel::from_kraus(&KrausSet { ops }))
}

pub fn measure_prepare(mp: &MeasurePrepare) -> Channel {
    Channel::from_measure_prepare(mp)
}

/// Gate matrices. Two-qubit gates take the first factor as control.
pub mod gates {
    use super::*;

    pub fn projector(bit: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(bit, bit)] = ONE;
        m
    }

    pub fn hadamard() -> ComplexMatrix {
        let s = 1.0 / 2f64.sqrt();
        qmath::matrix(2, &[real(s), real(s), real(s), real(-s)])
    }

    /// `diag(1, i)`.
    pub fn phase_s() -> ComplexMatrix {
        u_theta(std::f64::consts::FRAC_PI_2)
    }

    /// `|0⟩⟨0| + e^{iθ}|1⟩⟨1|`.
    pub fn u_theta(theta: f64) -> ComplexMatrix {
        qmath::matrix(2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, theta)])
    }

    /// The π/8 gate `U(π/4)`.
    pub fn pi8() -> ComplexMatrix {
        u_theta(std::f64::consts::FRAC_PI_4)
    }

    pub fn pauli(p: Pauli) -> ComplexMatrix {
        p.matrix()
    }

    pub fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }

    /// CNOT with the second factor as control.
    pub fn cnot_reversed() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(2, 2)] = ONE;
        m[(1, 3)] = ONE;
        m[(3, 1)] = ONE;
        m
    }

    pub fn cz() -> ComplexMatrix {
        let mut m = identity(4);
        m[(3, 3)] = -ONE;
        m
    }

    pub fn swap() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }

    pub fn iswap() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = c(0.0, 1.0);
        m[(2, 1)] = c(0.0, 1.0);
        m[(3, 3)] = ONE;
        m
    }
}

pub fn cnot() -> Channel {
    gate(gates::cnot(), "cnot")
}

pub fn hadamard() -> Channel {
    gate(gates::hadamard(), "hadamard")
}

pub fn phase_s() -> Channel {
    gate(gates::phase_s(), "phase_s")
}

pub fn pi8() -> Channel {
    gate(gates::pi8(), "pi8")
}

pub fn swap() -> Channel {
    gate(gates::swap(), "swap")
}

/// Partial transpose of a Choi matrix across in|out on the output factors.
pub fn choi_partial_transpose(c: &ChoiState) -> ComplexMatrix {
    let n = c.in_qubits + c.out_qubits;
    let outs: Vec<usize> = (c.in_qubits..n).collect();
    transpose_qubits(c.matrix(), n, &outs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{basis_state, labels, StateVector};

    fn phi_plus() -> ComplexMatrix {
        let v = StateVector::from_vec(vec![ONE, ZERO, ZERO, ONE]).scale(1.0 / 2f64.sqrt());
        qmath::outer(&v)
    }

    #[test]
    fn identity_choi_is_bell_projector() {
        let c = choi_of_unitary(&identity(2), 1).unwrap();
        assert!(max_abs_diff(c.matrix(), &phi_plus()) < 1e-15);
        assert_eq!(c.state().labels(), &["A1", "B1"]);
    }

    #[test]
    fn maximally_mixed_choi_gives_depolarizer() {
        let c = ChoiState::from_matrix(identity(4).scale(0.25), 1, 1).unwrap();
        let k = kraus_from_choi(&c).unwrap();
        assert_eq!(k.len(), 4);
        let ch = Channel::from_choi(c).unwrap();
        let out = ch.act(&gates::projector(0));
        assert!(max_abs_diff(&out, &identity(2).scale(0.5)) < 1e-12);
    }

    #[test]
    fn choi_action_matches_kraus_action() {
        let ch = cnot();
        for i in 0..4 {
            for j in 0..4 {
                let mut x = ComplexMatrix::zeros(4, 4);
                x[(i, j)] = ONE;
                assert!(max_abs_diff(&ch.choi().act(&x), &ch.act(&x)) < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_checks() {
        let bad = qmath::matrix(2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(choi_of_unitary(&bad, 1), Err(Error::NotUnitary(_))));
        assert!(choi_of_unitary(&identity(2), 2).is_err());
    }

    #[test]
    fn apply_examples() {
        let zero = DensityMatrix::from_pure(&basis_state(1, 0), labels(&["q"])).unwrap();
        let out = depolarize(1).apply(&zero, &["q"]).unwrap();
        assert!(max_abs_diff(out.matrix(), &identity(2).scale(0.5)) < 1e-14);
        let same = identity_channel(1).apply(&zero, &["q"]).unwrap();
        assert!(max_abs_diff(same.matrix(), zero.matrix()) < 1e-15);
        let ten = DensityMatrix::from_pure(&basis_state(2, 2), labels(&["a", "b"])).unwrap();
        let out = cnot().apply(&ten, &["a", "b"]).unwrap();
        assert!(max_abs_diff(out.matrix(), &qmath::outer(&basis_state(2, 3))) < 1e-15);
        // reversed targets: b controls a
        let out = cnot().apply(&ten, &["b", "a"]).unwrap();
        assert!(max_abs_diff(out.matrix(), ten.matrix()) < 1e-15);
        assert!(matches!(
            cnot().apply(&ten, &["a"]),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn mix_endpoints_and_range() {
        let id = identity_channel(1);
        let dep = depolarize(1);
        assert_eq!(mix(0.0, &id, &dep).unwrap(), id);
        assert_eq!(mix(1.0, &id, &dep).unwrap(), dep);
        assert!(matches!(mix(1.5, &id, &dep), Err(Error::InvalidProbability(_))));
        let half = mix(0.5, &id, &dep).unwrap();
        let expected = phi_plus().scale(0.5) + identity(4).scale(0.125);
        assert!(max_abs_diff(half.choi().matrix(), &expected) < 1e-12);
    }

    #[test]
    fn ptm_examples() {
        let id = identity_channel(1).ptm().unwrap();
        assert!((id.matrix() - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-14);
        let dep = depolarize(1).ptm().unwrap();
        let mut expected = DMatrix::<f64>::zeros(4, 4);
        expected[(0, 0)] = 1.0;
        assert!((dep.matrix() - &expected).abs().max() < 1e-14);
        let deph = dephase().ptm().unwrap();
        expected[(3, 3)] = 1.0;
        assert!((deph.matrix() - &expected).abs().max() < 1e-14);
        let h = hadamard().ptm().unwrap();
        assert!((h.matrix()[(1, 3)] - 1.0).abs() < 1e-14);
        assert!((h.matrix()[(2, 2)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn gate_matrices() {
        let s = gates::phase_s();
        assert!((s[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((gates::pi8()[(1, 1)] - C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        let h = gates::hadamard();
        let hh = kron(&h, &h);
        let flipped = &hh * gates::cnot() * &hh;
        assert!(max_abs_diff(&flipped, &gates::cnot_reversed()) < 1e-14);
    }

    #[test]
    fn measure_prepare_is_entanglement_breaking() {
        let povm = vec![gates::projector(0), gates::projector(1)];
        let plus = DensityMatrix::from_bloch([1.0, 0.0, 0.0], "q").unwrap();
        let zero = DensityMatrix::from_bloch([0.0, 0.0, 1.0], "q").unwrap();
        let mp = MeasurePrepare::new(povm, vec![plus, zero]).unwrap();
        let ch = measure_prepare(&mp);
        let pt = choi_partial_transpose(ch.choi());
        assert!(min_eigenvalue(&pt) > -1e-12);
        assert!(max_abs_diff(ch.choi().matrix(), mp.choi().matrix()) < 1e-12);
        let bad = MeasurePrepare::new(
            vec![gates::projector(0)],
            vec![DensityMatrix::maximally_mixed(labels(&["q"]))],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn kraus_validation() {
        assert!(KrausSet::new(vec![identity(2).scale(0.5)]).is_err());
        assert!(KrausSet::new(vec![]).is_err());
    }
}
