//! Dense complex linear algebra over multi-qubit Hilbert spaces.
//!
//! Index convention: for an `n`-qubit operator whose subsystems carry labels
//! `l_0, .., l_{n-1}`, label `l_q` is the `q`-th tensor factor from the left
//! and therefore owns bit `n - 1 - q` of a basis index. [`kron`] follows the
//! same convention (`i_a * dim_b + i_b`).

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue still accepted as round-off.
pub const EIGEN_FLOOR: f64 = -1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Builds a square matrix from row-major complex entries.
pub fn matrix(dim: usize, entries: &[C64]) -> ComplexMatrix {
    assert_eq!(entries.len(), dim * dim);
    ComplexMatrix::from_row_slice(dim, dim, entries)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

/// Hilbert-Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn outer(psi: &StateVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigendecomposition of the Hermitian part `(M + M†)/2`; eigenvalues in
/// ascending order, eigenvectors as matching columns.
///
/// Uses faer: nalgebra's `symmetric_eigen` returns non-finite values on some
/// sparse rank-deficient inputs (e.g. the 64×64 maximally entangled
/// projector).
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = hermitian_part(m);
    let d = h.nrows();
    let f = faer::Mat::<faer::c64>::from_fn(d, d, |i, j| {
        let z = h[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let eig = f
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition converges");
    let (s, u) = (eig.S(), eig.U());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let values = order.iter().map(|&k| s[k].re).collect();
    let vectors = ComplexMatrix::from_fn(d, d, |i, k| {
        let z = u[(i, order[k])];
        C64::new(z.re, z.im)
    });
    (values, vectors)
}

pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    eigh(m).0
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    eigvalsh(m)[0]
}

pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Number of qubits of a `2^n`-dimensional space.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidMatrix(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

#[inline]
fn bit_of(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Partial trace keeping the qubit positions in `keep` (their relative order
/// is preserved in the output).
pub fn trace_out(m: &ComplexMatrix, n: usize, keep: &[usize]) -> ComplexMatrix {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let keep_offsets: Vec<usize> = (0..1usize << k)
        .map(|v| scatter(v, keep, n))
        .collect();
    let traced_offsets: Vec<usize> = (0..1usize << traced.len())
        .map(|v| scatter(v, &traced, n))
        .collect();
    let dk = 1 << k;
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let (bi, bj) = (keep_offsets[i], keep_offsets[j]);
            let s: C64 = traced_offsets
                .iter()
                .map(|&t| m[(bi | t, bj | t)])
                .sum();
            out[(i, j)] = s;
        }
    }
    out
}

/// Places the bits of `v` (most significant first) on the given qubit
/// positions of an `n`-qubit index.
fn scatter(v: usize, positions: &[usize], n: usize) -> usize {
    let k = positions.len();
    positions
        .iter()
        .enumerate()
        .filter(|(j, _)| v & (1 << (k - 1 - j)) != 0)
        .map(|(_, &q)| bit_of(n, q))
        .sum()
}

fn gather(index: usize, positions: &[usize], n: usize) -> usize {
    positions
        .iter()
        .fold(0, |acc, &q| (acc << 1) | usize::from(index & bit_of(n, q) != 0))
}

/// Partial transpose on the given qubit positions.
pub fn transpose_qubits(m: &ComplexMatrix, n: usize, positions: &[usize]) -> ComplexMatrix {
    let mask: usize = positions.iter().map(|&q| bit_of(n, q)).sum();
    let d = m.nrows();
    ComplexMatrix::from_fn(d, d, |i, j| {
        let ii = (i & !mask) | (j & mask);
        let jj = (j & !mask) | (i & mask);
        m[(ii, jj)]
    })
}

/// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
pub fn permute_qubits(m: &ComplexMatrix, n: usize, perm: &[usize]) -> ComplexMatrix {
    let d = m.nrows();
    let map: Vec<usize> = (0..d).map(|i| permute_index(i, n, perm)).collect();
    ComplexMatrix::from_fn(d, d, |i, j| m[(map[i], map[j])])
}

pub fn permute_vector(v: &StateVector, n: usize, perm: &[usize]) -> StateVector {
    StateVector::from_fn(v.len(), |i, _| v[permute_index(i, n, perm)])
}

/// Input index corresponding to output index `i` under `perm`.
fn permute_index(i: usize, n: usize, perm: &[usize]) -> usize {
    (0..n)
        .filter(|&k| i & bit_of(n, k) != 0)
        .map(|k| bit_of(n, perm[k]))
        .sum()
}

/// Left-multiplies `m` by `op` acting on the qubit positions `targets`
/// (identity elsewhere).
pub fn apply_left(op: &ComplexMatrix, m: &ComplexMatrix, n: usize, targets: &[usize]) -> ComplexMatrix {
    let k = targets.len();
    let dk = 1 << k;
    let d = m.nrows();
    let mask: usize = targets.iter().map(|&q| bit_of(n, q)).sum();
    let offsets: Vec<usize> = (0..dk).map(|v| scatter(v, targets, n)).collect();
    let mut out = ComplexMatrix::zeros(d, m.ncols());
    for row in 0..d {
        let base = row & !mask;
        let a = gather(row, targets, n);
        for (b, &off) in offsets.iter().enumerate() {
            let coeff = op[(a, b)];
            if coeff == ZERO {
                continue;
            }
            let src = base | off;
            for col in 0..m.ncols() {
                out[(row, col)] += coeff * m[(src, col)];
            }
        }
    }
    out
}

/// `op_t · m · op_t†` with `op` embedded on `targets`.
pub fn conjugate_on(op: &ComplexMatrix, m: &ComplexMatrix, n: usize, targets: &[usize]) -> ComplexMatrix {
    let left = apply_left(op, m, n, targets);
    apply_left(op, &left.adjoint(), n, targets).adjoint()
}

/// Embeds `op` on `targets` of an `n`-qubit space as a full matrix.
pub fn embed(op: &ComplexMatrix, n: usize, targets: &[usize]) -> ComplexMatrix {
    apply_left(op, &identity(1 << n), n, targets)
}

// ---------------------------------------------------------------------------
// Paulis

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i]
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => matrix(2, &[ONE, ZERO, ZERO, ONE]),
            Pauli::X => matrix(2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => matrix(2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => matrix(2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Phase {
    #[default]
    PlusOne,
    MinusOne,
    PlusI,
    MinusI,
}

impl Phase {
    pub fn value(self) -> C64 {
        match self {
            Phase::PlusOne => ONE,
            Phase::MinusOne => -ONE,
            Phase::PlusI => I,
            Phase::MinusI => -I,
        }
    }

    /// Nearest phase to a unit-modulus complex number.
    pub fn nearest(z: C64) -> Phase {
        if z.re.abs() >= z.im.abs() {
            if z.re >= 0.0 {
                Phase::PlusOne
            } else {
                Phase::MinusOne
            }
        } else if z.im >= 0.0 {
            Phase::PlusI
        } else {
            Phase::MinusI
        }
    }
}

/// A tensor product of single-qubit Paulis with an overall phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub factors: Vec<Pauli>,
    pub phase: Phase,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Self {
        PauliString {
            factors,
            phase: Phase::PlusOne,
        }
    }

    pub fn with_phase(factors: Vec<Pauli>, phase: Phase) -> Self {
        PauliString { factors, phase }
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    /// Lexicographic index in `[I, X, Y, Z]` order per qubit.
    pub fn index(&self) -> usize {
        self.factors.iter().fold(0, |acc, p| acc * 4 + p.index())
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let factors = (0..n)
            .map(|k| Pauli::from_index((index >> (2 * (n - 1 - k))) & 3))
            .collect();
        PauliString::new(factors)
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&p| p == Pauli::I)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let m = kron_all(self.factors.iter().map(|p| p.matrix()).collect::<Vec<_>>().iter());
        m * self.phase.value()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            Phase::PlusOne => "+",
            Phase::MinusOne => "-",
            Phase::PlusI => "+i",
            Phase::MinusI => "-i",
        };
        f.write_str(sign)?;
        for p in &self.factors {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// All `4^n` Pauli strings in lexicographic order.
pub fn pauli_basis(n: usize) -> Vec<PauliString> {
    (0..1usize << (2 * n))
        .map(|k| PauliString::from_index(k, n))
        .collect()
}

/// Decomposes `m` as `Σ c_P P`; returns the coefficients in lexicographic
/// order.
pub fn pauli_coefficients(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = qubit_count(m.nrows())?;
    let d = m.nrows() as f64;
    Ok(pauli_basis(n)
        .iter()
        .map(|p| hs_inner(&p.matrix(), m) / d)
        .collect())
}

/// If `m` equals a single Pauli string up to a unit-modulus phase (to
/// `tol`), returns it.
pub fn as_pauli_string(m: &ComplexMatrix, tol: f64) -> Option<PauliString> {
    let coeffs = pauli_coefficients(m).ok()?;
    let n = qubit_count(m.nrows()).ok()?;
    let (k, top) = coeffs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    if (top.norm() - 1.0).abs() > tol {
        return None;
    }
    let rest: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if rest.sqrt() > tol {
        return None;
    }
    let mut p = PauliString::from_index(k, n);
    p.phase = Phase::nearest(*top);
    Some(p)
}

// ---------------------------------------------------------------------------
// Density matrices

/// A validated density matrix over labelled qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    labels: Vec<String>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(matrix: ComplexMatrix, labels: Vec<String>) -> Result<Self> {
        let n = Self::check_shape(&matrix, &labels)?;
        let _ = n;
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let lo = min_eigenvalue(&matrix);
        if lo < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(DensityMatrix { matrix, labels })
    }

    /// Skips the spectral checks; the caller guarantees validity.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix, labels: Vec<String>) -> Self {
        debug_assert!(Self::check_shape(&matrix, &labels).is_ok());
        DensityMatrix { matrix, labels }
    }

    fn check_shape(matrix: &ComplexMatrix, labels: &[String]) -> Result<usize> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("matrix not square".into()));
        }
        let n = qubit_count(matrix.nrows())?;
        if labels.len() != n {
            return Err(Error::InvalidState(format!(
                "{} labels for {n} qubits",
                labels.len()
            )));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidState("duplicate labels".into()));
        }
        Ok(n)
    }

    pub fn from_pure(psi: &StateVector, labels: Vec<String>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(outer(psi), labels)
    }

    pub fn maximally_mixed(labels: Vec<String>) -> Self {
        let d = 1 << labels.len();
        DensityMatrix {
            matrix: identity(d).scale(1.0 / d as f64),
            labels,
        }
    }

    /// Single-qubit state from a Bloch vector (`|r| <= 1`).
    pub fn from_bloch(r: [f64; 3], label: &str) -> Result<Self> {
        let m = (Pauli::I.matrix()
            + Pauli::X.matrix() * real(r[0])
            + Pauli::Y.matrix() * real(r[1])
            + Pauli::Z.matrix() * real(r[2]))
        .scale(0.5);
        Self::new(m, vec![label.to_string()])
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.position(l.as_ref())).collect()
    }

    pub fn purity(&self) -> f64 {
        hs_inner(&self.matrix, &self.matrix).re
    }

    pub fn fidelity_with_pure(&self, psi: &StateVector) -> f64 {
        (psi.adjoint() * &self.matrix * psi)[(0, 0)].re
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch(&self) -> [f64; 3] {
        assert_eq!(self.n_qubits(), 1, "bloch vector needs one qubit");
        let get = |p: Pauli| hs_inner(&p.matrix(), &self.matrix).re;
        [get(Pauli::X), get(Pauli::Y), get(Pauli::Z)]
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        Self::check_shape(&self.matrix, &labels)?;
        self.labels = labels;
        Ok(self)
    }

    /// Reorders the tensor factors to follow `order`.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.n_qubits() {
            return Err(Error::InvalidState("reorder needs every label".into()));
        }
        let perm = self.positions(order)?;
        let m = permute_qubits(&self.matrix, self.n_qubits(), &perm);
        Ok(DensityMatrix {
            matrix: m,
            labels: order.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let m = kron(&self.matrix, &other.matrix);
        Self::check_shape(&m, &labels)?;
        Ok(DensityMatrix { matrix: m, labels })
    }
}

pub fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// A partition of a labelled system into two nonempty halves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteSplit {
    pub left: BTreeSet<String>,
    pub right: BTreeSet<String>,
}

impl BipartiteSplit {
    pub fn new<S: AsRef<str>>(left: &[S], right: &[S]) -> Result<Self> {
        let left: BTreeSet<String> = left.iter().map(|s| s.as_ref().to_string()).collect();
        let right: BTreeSet<String> = right.iter().map(|s| s.as_ref().to_string()).collect();
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidSplit("both sides must be nonempty".into()));
        }
        if !left.is_disjoint(&right) {
            return Err(Error::InvalidSplit("sides overlap".into()));
        }
        Ok(BipartiteSplit { left, right })
    }

    pub fn swapped(&self) -> Self {
        BipartiteSplit {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    /// Checks the split covers exactly `labels`.
    pub fn validate(&self, labels: &[String]) -> Result<()> {
        let all: BTreeSet<String> = labels.iter().cloned().collect();
        let union: BTreeSet<String> = self.left.union(&self.right).cloned().collect();
        if union != all || all.len() != labels.len() {
            return Err(Error::InvalidSplit(format!(
                "split {self} does not partition {labels:?}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BipartiteSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join("");
        write!(f, "({})-({})", join(&self.left), join(&self.right))
    }
}

/// Reduced state on `keep` (output factors follow the input order).
pub fn partial_trace<S: AsRef<str>>(rho: &DensityMatrix, keep: &[S]) -> Result<DensityMatrix> {
    let mut positions = rho.positions(keep)?;
    positions.sort_unstable();
    positions.dedup();
    let m = trace_out(rho.matrix(), rho.n_qubits(), &positions);
    let labels = positions.iter().map(|&q| rho.labels[q].clone()).collect();
    Ok(DensityMatrix::new_unchecked(m, labels))
}

/// Transpose on the right-hand block of `split`.
pub fn partial_transpose(rho: &DensityMatrix, split: &BipartiteSplit) -> Result<ComplexMatrix> {
    split.validate(rho.labels())?;
    let right: Vec<&String> = split.right.iter().collect();
    let positions = rho.positions(&right)?;
    Ok(transpose_qubits(rho.matrix(), rho.n_qubits(), &positions))
}

/// Smallest eigenvalue of the partial transpose; `>= EIGEN_FLOOR` means PPT.
pub fn min_pt_eigenvalue(rho: &DensityMatrix, split: &BipartiteSplit) -> Result<f64> {
    Ok(min_eigenvalue(&partial_transpose(rho, split)?))
}

pub fn is_ppt(rho: &DensityMatrix, split: &BipartiteSplit) -> Result<bool> {
    Ok(min_pt_eigenvalue(rho, split)? >= EIGEN_FLOOR)
}

pub fn von_neumann_entropy(rho: &ComplexMatrix) -> f64 {
    eigvalsh(rho)
        .into_iter()
        .filter(|&l| l > 1e-14)
        .map(|l| -l * l.log2())
        .sum()
}

/// Entanglement entropy (in ebits) of a pure state across `split`.
pub fn entanglement_entropy_pure(
    psi: &StateVector,
    labels: &[String],
    split: &BipartiteSplit,
) -> Result<f64> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    split.validate(labels)?;
    let n = qubit_count(psi.len())?;
    let keep: Vec<usize> = (0..n).filter(|&q| split.left.contains(&labels[q])).collect();
    let reduced = trace_out(&outer(psi), n, &keep);
    Ok(von_neumann_entropy(&reduced))
}

/// Schmidt coefficients (squared, descending) of a pure state across a split.
pub fn schmidt_probabilities(
    psi: &StateVector,
    labels: &[String],
    split: &BipartiteSplit,
) -> Result<Vec<f64>> {
    split.validate(labels)?;
    let n = qubit_count(psi.len())?;
    let keep: Vec<usize> = (0..n).filter(|&q| split.left.contains(&labels[q])).collect();
    let mut vals = eigvalsh(&trace_out(&outer(psi), n, &keep));
    vals.reverse();
    Ok(vals)
}

/// Coefficients `r_P = Tr[P ρ]` for every Pauli string, lexicographic order.
pub fn pauli_expand(rho: &DensityMatrix) -> Vec<f64> {
    pauli_expand_matrix(rho.matrix())
}

pub fn pauli_expand_matrix(m: &ComplexMatrix) -> Vec<f64> {
    let n = qubit_count(m.nrows()).expect("power-of-two dimension");
    let d = m.nrows();
    // P is a signed permutation, so Tr[P ρ] needs one entry per row.
    (0..1usize << (2 * n))
        .map(|k| {
            let p = PauliString::from_index(k, n);
            let mut acc = ZERO;
            for row in 0..d {
                let (col, phase) = pauli_action(&p.factors, row, n);
                acc += phase * m[(col, row)];
            }
            acc.re
        })
        .collect()
}

/// The single nonzero entry of row `row` of the Pauli string: `(col, P[row, col])`.
fn pauli_action(factors: &[Pauli], row: usize, n: usize) -> (usize, C64) {
    let mut src = 0usize;
    let mut phase = ONE;
    for (q, p) in factors.iter().enumerate() {
        let bit = (row >> (n - 1 - q)) & 1;
        let (sbit, ph) = match p {
            Pauli::I => (bit, ONE),
            Pauli::X => (bit ^ 1, ONE),
            // Y = [[0, -i], [i, 0]]: Y[0,1] = -i, Y[1,0] = i.
            Pauli::Y => (bit ^ 1, if bit == 0 { -I } else { I }),
            Pauli::Z => (bit, if bit == 0 { ONE } else { -ONE }),
        };
        src |= sbit << (n - 1 - q);
        phase *= ph;
    }
    (src, phase)
}

/// Inverse of [`pauli_expand`]: `ρ = (1/2^n) Σ r_P P`.
pub fn pauli_reconstruct(coeffs: &[f64]) -> Result<ComplexMatrix> {
    let n4 = coeffs.len();
    if n4 == 0 || !n4.is_power_of_two() || n4.trailing_zeros() % 2 != 0 {
        return Err(Error::InvalidMatrix(format!(
            "{n4} Pauli coefficients is not a power of four"
        )));
    }
    let n = (n4.trailing_zeros() / 2) as usize;
    let d = 1 << n;
    let mut m = ComplexMatrix::zeros(d, d);
    for (k, &r) in coeffs.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let p = PauliString::from_index(k, n);
        for row in 0..d {
            let (col, phase) = pauli_action(&p.factors, row, n);
            m[(row, col)] += phase * r;
        }
    }
    Ok(m.scale(1.0 / d as f64))
}

pub fn normalized(v: &StateVector) -> StateVector {
    v.scale(1.0 / v.norm())
}

/// Computational basis state `|index>` on `n` qubits.
pub fn basis_state(n: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(1 << n);
    v[index] = ONE;
    v
}
