//! Pairing-list machine state: every qubit has one partner and each pair
//! carries its two-qubit Pauli coefficients.

use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;

use crate::bmachine::BiEntanglingGateSpec;
use crate::channels::{MeasurePrepare, Ptm};
use crate::qmath::{kron, ComplexMatrix, DensityMatrix, Pauli, C64};
use crate::{Error, Result};

/// Eigenvalues of a conditional state in `[−PSD_REPAIR, 0)` are clipped.
pub const PSD_REPAIR: f64 = 1e-7;
/// Eigenvalues above `−PSD_NOISE` (relative to the trace) are round-off and
/// left alone.
const PSD_NOISE: f64 = 1e-12;
const MIN_WEIGHT: f64 = 1e-12;

type Mat2 = Matrix2<C64>;
type Mat4 = Matrix4<C64>;

fn pauli_pairs() -> &'static [Mat4; 16] {
    static CELL: OnceLock<[Mat4; 16]> = OnceLock::new();
    CELL.get_or_init(|| {
        std::array::from_fn(|k| {
            to_mat4(&kron(&Pauli::from_index(k / 4).matrix(), &Pauli::from_index(k % 4).matrix()))
        })
    })
}

fn to_mat4(m: &ComplexMatrix) -> Mat4 {
    Mat4::from_fn(|i, j| m[(i, j)])
}

fn to_mat2(m: &ComplexMatrix) -> Mat2 {
    Mat2::from_fn(|i, j| m[(i, j)])
}

fn from_mat4(m: &Mat4) -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

/// Perfect matching of qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingList {
    partner: Vec<usize>,
}

impl PairingList {
    pub fn partner(&self, q: usize) -> usize {
        self.partner[q]
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    /// Pairs `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.partner.len())
            .filter(|&q| q < self.partner[q])
            .map(|q| (q, self.partner[q]))
            .collect()
    }

    pub fn is_perfect_matching(&self) -> bool {
        self.partner
            .iter()
            .enumerate()
            .all(|(q, &p)| p != q && p < self.partner.len() && self.partner[p] == q)
    }
}

/// Pauli coefficients `r_ij = Tr[(σ_i ⊗ σ_j) ρ]` of a pair, first factor on
/// the lower qubit id.
#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    qubits: [usize; 2],
    r: Matrix4<f64>,
}

impl PairState {
    fn from_density(a: usize, b: usize, rho: &Mat4) -> Self {
        let (qubits, rho) = if a < b { ([a, b], *rho) } else { ([b, a], swap_factors(rho)) };
        let rt = rho.transpose();
        let paulis = pauli_pairs();
        let r = Matrix4::from_fn(|i, j| paulis[4 * i + j].component_mul(&rt).sum().re);
        PairState { qubits, r }
    }

    pub fn qubits(&self) -> [usize; 2] {
        self.qubits
    }

    /// The 16 coefficients in `[I,X,Y,Z] ⊗ [I,X,Y,Z]` order.
    pub fn coefficients(&self) -> [f64; 16] {
        std::array::from_fn(|k| self.r[(k / 4, k % 4)])
    }

    pub fn coefficient(&self, first: Pauli, second: Pauli) -> f64 {
        self.r[(first.index(), second.index())]
    }

    /// Density matrix with the lower qubit first.
    pub fn density(&self) -> ComplexMatrix {
        from_mat4(&self.density4())
    }

    fn density4(&self) -> Mat4 {
        let paulis = pauli_pairs();
        let mut m = Mat4::zeros();
        for (k, p) in paulis.iter().enumerate() {
            let c = self.r[(k / 4, k % 4)];
            if c != 0.0 {
                m += p * C64::from(0.25 * c);
            }
        }
        m
    }

    /// Density matrix with `first` as the first factor.
    fn density_from(&self, first: usize) -> Mat4 {
        if first == self.qubits[0] {
            self.density4()
        } else {
            swap_factors(&self.density4())
        }
    }

    fn position(&self, q: usize) -> usize {
        if self.qubits[0] == q {
            0
        } else {
            1
        }
    }
}

fn swap_factors(m: &Mat4) -> Mat4 {
    const P: [usize; 4] = [0, 2, 1, 3];
    Mat4::from_fn(|i, j| m[(P[i], P[j])])
}

/// `op ⊗ I` or `I ⊗ op`.
fn embed(op: &Mat2, position: usize) -> Mat4 {
    Mat4::from_fn(|i, j| {
        let (hi, lo) = ((i >> 1, j >> 1), (i & 1, j & 1));
        match position {
            0 if lo.0 == lo.1 => op[hi],
            1 if hi.0 == hi.1 => op[lo],
            _ => C64::from(0.0),
        }
    })
}

/// Clips small negative eigenvalues of a conditional state and
/// renormalizes; aborts on anything larger.
pub fn repair(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.shape() == (4, 4) {
        return repair4(&to_mat4(rho)).map(|m| from_mat4(&m));
    }
    repair_general(rho)
}

fn repair_general(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rho = crate::qmath::hermitian_part(rho);
    let tr = rho.trace().re;
    if tr < MIN_WEIGHT {
        return Err(Error::ShotAborted(format!("conditional state has trace {tr:.3e}")));
    }
    let (vals, vecs) = crate::qmath::eigh(&rho);
    clip(&vals, tr)?;
    let mut out = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
    for (k, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let col = vecs.column(k);
            out += (&col * col.adjoint()).scale(v);
        }
    }
    let tr = out.trace().re;
    Ok(out.unscale(tr))
}

/// Errors when the smallest eigenvalue is beyond repair; `Ok(true)` when
/// clipping is needed.
fn clip(vals: &[f64], tr: f64) -> Result<bool> {
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_REPAIR * tr {
        return Err(Error::ShotAborted(format!("conditional state has eigenvalue {:.3e}", min / tr)));
    }
    Ok(min < -PSD_NOISE * tr)
}

fn repair4(rho: &Mat4) -> Result<Mat4> {
    let rho = (rho + rho.adjoint()) * C64::from(0.5);
    let tr = rho.trace().re;
    if tr < MIN_WEIGHT {
        return Err(Error::ShotAborted(format!("conditional state has trace {tr:.3e}")));
    }
    let vals = rho.symmetric_eigenvalues();
    if vals.iter().any(|v| !v.is_finite()) {
        return repair_general(&from_mat4(&rho)).map(|m| to_mat4(&m));
    }
    if !clip(vals.as_slice(), tr)? {
        return Ok(rho / C64::from(tr));
    }
    let eig = rho.symmetric_eigen();
    if eig.eigenvectors.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return repair_general(&from_mat4(&rho)).map(|m| to_mat4(&m));
    }
    let mut out = Mat4::zeros();
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        if v > 0.0 {
            let col = eig.eigenvectors.column(k);
            out += col * col.adjoint() * C64::from(v);
        }
    }
    let tr = out.trace().re;
    Ok(out / C64::from(tr))
}

/// Which branch a cross-pair gate took, and which Kraus pair or outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Separable(usize),
    Swap(usize),
    Eb(usize),
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > MIN_WEIGHT) {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (k, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(k);
        if u < acc {
            return Some(k);
        }
    }
    last
}

/// Pairing list plus one [`PairState`] per pair.
#[derive(Clone, Debug)]
pub struct Machine {
    partner: Vec<usize>,
    slot: Vec<usize>,
    pairs: Vec<PairState>,
    n_qubits: usize,
}

impl Machine {
    /// Pairs `(2k, 2k+1)` with product states. An odd register is padded
    /// with an idle `|0⟩` qubit when `pad` is set.
    pub fn new(init: &[DensityMatrix], pad: bool) -> Result<Self> {
        let n_qubits = init.len();
        let mut states: Vec<ComplexMatrix> = Vec::with_capacity(n_qubits + 1);
        for (q, rho) in init.iter().enumerate() {
            if rho.n_qubits() != 1 {
                return Err(Error::InvalidState(format!("initial state of qubit {q} is not one qubit")));
            }
            states.push(rho.matrix().clone());
        }
        if n_qubits % 2 == 1 {
            if !pad {
                return Err(Error::InvalidCircuit(format!(
                    "{n_qubits} qubits cannot be paired; enable padding"
                )));
            }
            let mut zero = ComplexMatrix::zeros(2, 2);
            zero[(0, 0)] = crate::qmath::ONE;
            states.push(zero);
        }
        let total = states.len();
        let mut partner = vec![0; total];
        let mut slot = vec![0; total];
        let mut pairs = Vec::with_capacity(total / 2);
        for k in 0..total / 2 {
            let (a, b) = (2 * k, 2 * k + 1);
            partner[a] = b;
            partner[b] = a;
            slot[a] = k;
            slot[b] = k;
            pairs.push(PairState::from_density(a, b, &to_mat4(&kron(&states[a], &states[b]))));
        }
        Ok(Machine {
            partner,
            slot,
            pairs,
            n_qubits,
        })
    }

    /// Logical qubit count, excluding padding.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn pairing(&self) -> PairingList {
        PairingList {
            partner: self.partner.clone(),
        }
    }

    pub fn partner(&self, q: usize) -> usize {
        self.partner[q]
    }

    pub fn pair_of(&self, q: usize) -> &PairState {
        &self.pairs[self.slot[q]]
    }

    pub fn pair_states(&self) -> &[PairState] {
        &self.pairs
    }

    /// Number of reals held by the machine.
    pub fn storage_reals(&self) -> usize {
        16 * self.pairs.len()
    }

    /// Reduced single-qubit state.
    pub fn qubit_state(&self, q: usize) -> ComplexMatrix {
        let pair = self.pair_of(q);
        let keep = [pair.position(q)];
        crate::qmath::trace_out(&pair.density(), 2, &keep)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::InvalidCircuit(format!("qubit {q} out of range")));
        }
        Ok(())
    }

    /// Matching is perfect and every pair has `r₀₀ = 1`.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.pairing().is_perfect_matching() {
            return Err(Error::InvalidCircuit("pairing list is not a perfect matching".into()));
        }
        for p in &self.pairs {
            let [a, b] = p.qubits;
            if self.partner[a] != b || a >= b {
                return Err(Error::InvalidCircuit(format!("pair ({a}, {b}) out of sync")));
            }
            if (p.r[(0, 0)] - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidState(format!("pair ({a}, {b}) has r₀ = {}", p.r[(0, 0)])));
            }
        }
        Ok(())
    }

    /// Local form of [`Machine::check_invariants`]: only the entries a gate
    /// touched can change, so checking them keeps the matching perfect.
    fn debug_check(&self, touched: &[usize]) {
        if cfg!(debug_assertions) {
            for &q in touched {
                let p = self.partner[q];
                assert!(p != q && self.partner[p] == q, "qubit {q} lost its partner");
                let pair = &self.pairs[self.slot[q]];
                assert!(pair.qubits.contains(&q) && pair.qubits.contains(&p));
                assert!((pair.r[(0, 0)] - 1.0).abs() < 1e-9, "r₀ = {}", pair.r[(0, 0)]);
            }
        }
    }

    fn set_pair(&mut self, slot: usize, a: usize, b: usize, rho: &Mat4) {
        self.pairs[slot] = PairState::from_density(a, b, rho);
        self.partner[a] = b;
        self.partner[b] = a;
        self.slot[a] = slot;
        self.slot[b] = slot;
    }

    /// Multiplies the target's half of its pair vector by a single-qubit PTM.
    pub fn apply_1q(&mut self, ptm: &Ptm, target: usize) -> Result<()> {
        self.check_qubit(target)?;
        if ptm.n_qubits() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: ptm.n_qubits() });
        }
        let t = Matrix4::from_fn(|i, j| ptm.matrix()[(i, j)]);
        let pair = &mut self.pairs[self.slot[target]];
        if pair.qubits[0] == target {
            pair.r = t * pair.r;
        } else {
            pair.r *= t.transpose();
        }
        self.debug_check(&[target]);
        Ok(())
    }

    /// Applies a two-qubit PTM to qubits that share a pair; `a` is the
    /// gate's first target.
    pub fn apply_2q_in_pair(&mut self, ptm: &Ptm, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if self.partner[a] != b {
            return Err(Error::NotPaired(a, b));
        }
        if ptm.n_qubits() != 2 {
            return Err(Error::ArityMismatch { expected: 2, got: ptm.n_qubits() });
        }
        let pair = &mut self.pairs[self.slot[a]];
        let reversed = pair.qubits[0] != a;
        let r = if reversed { pair.r.transpose() } else { pair.r };
        let m = ptm.matrix();
        let out = Matrix4::from_fn(|i, j| {
            let row = 4 * i + j;
            (0..16).map(|k| m[(row, k)] * r[(k / 4, k % 4)]).sum()
        });
        pair.r = if reversed { out.transpose() } else { out };
        self.debug_check(&[a, b]);
        Ok(())
    }

    /// Samples a branch of `spec` and dispatches to it.
    pub fn apply_2q_cross_pair<R: Rng + ?Sized>(
        &mut self,
        spec: &BiEntanglingGateSpec,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<Branch> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if self.partner[a] == b || a == b {
            return Err(Error::InvalidCircuit(format!("qubits {a} and {b} share a pair")));
        }
        let branch = sample_index(&spec.weights(), rng).expect("weights sum to one");
        match branch {
            0 => self.separable_branch(spec.separable(), a, b, rng).map(Branch::Separable),
            1 => self.swap_branch(spec.swap(), a, b, rng).map(Branch::Swap),
            _ => {
                let mp = spec.eb().expect("validated spec");
                self.eb_branch(mp, a, b, rng).map(Branch::Eb)
            }
        }
    }

    /// Samples one Kraus pair `A ⊗ B` with its Born weight and conditions
    /// the two pairs independently.
    pub fn separable_branch<R: Rng + ?Sized>(
        &mut self,
        pairs: &[crate::bmachine::KrausPair],
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<usize> {
        if pairs.is_empty() {
            return Err(Error::ShotAborted("empty separable branch".into()));
        }
        let (sa, sb) = (self.slot[a], self.slot[b]);
        let (pa, pb) = (self.pairs[sa].position(a), self.pairs[sb].position(b));
        let (ra, rb) = (self.pairs[sa].density4(), self.pairs[sb].density4());
        let mut cand = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        for k in pairs {
            let ea = embed(&to_mat2(&k.a), pa);
            let eb = embed(&to_mat2(&k.b), pb);
            let na = ea * ra * ea.adjoint();
            let nb = eb * rb * eb.adjoint();
            weights.push(na.trace().re * nb.trace().re);
            cand.push((na, nb));
        }
        let i = sample_index(&weights, rng).ok_or_else(|| {
            Error::ShotAborted(format!("separable branch on ({a}, {b}) has zero total weight"))
        })?;
        let (qa, qb) = (self.pairs[sa].qubits, self.pairs[sb].qubits);
        let na = repair4(&cand[i].0)?;
        let nb = repair4(&cand[i].1)?;
        self.set_pair(sa, qa[0], qa[1], &na);
        self.set_pair(sb, qb[0], qb[1], &nb);
        self.debug_check(&[qa[0], qa[1], qb[0], qb[1]]);
        Ok(i)
    }

    /// Exchanges the pair memberships of `a` and `b`, then runs the
    /// separable branch.
    pub fn swap_branch<R: Rng + ?Sized>(
        &mut self,
        pairs: &[crate::bmachine::KrausPair],
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<usize> {
        self.relabel_swap(a, b);
        self.separable_branch(pairs, a, b, rng)
    }

    /// Pure bookkeeping: `(x, a), (b, y)` become `(x, b), (a, y)` with the
    /// same coefficient vectors.
    pub fn relabel_swap(&mut self, a: usize, b: usize) {
        let (sa, sb) = (self.slot[a], self.slot[b]);
        let (x, y) = (self.partner[a], self.partner[b]);
        let ra = self.pairs[sa].density_from(x);
        let rb = self.pairs[sb].density_from(b);
        self.set_pair(sa, x, b, &ra);
        self.set_pair(sb, a, y, &rb);
        self.debug_check(&[x, y, a, b]);
    }

    /// Measures `(a, b)`, rewires `(x, a), (b, y)` to `(x, y), (a, b)`:
    /// the partners keep their conditional joint state and `(a, b)` gets the
    /// prepared state of the sampled outcome.
    pub fn eb_branch<R: Rng + ?Sized>(
        &mut self,
        mp: &MeasurePrepare,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let (sa, sb) = (self.slot[a], self.slot[b]);
        let (x, y) = (self.partner[a], self.partner[b]);
        let rxa = self.pairs[sa].density_from(x);
        let rby = self.pairs[sb].density_from(b);
        // (a, b) marginal is a product because the pairs are independent.
        let rho_a = Mat2::from_fn(|i, j| rxa[(i, j)] + rxa[(2 + i, 2 + j)]);
        let rho_b = Mat2::from_fn(|i, j| rby[(2 * i, 2 * j)] + rby[(2 * i + 1, 2 * j + 1)]);
        let rho_ab = rho_a.kronecker(&rho_b);
        let povm: Vec<Mat4> = mp.povm().iter().map(to_mat4).collect();
        let probs: Vec<f64> = povm
            .iter()
            .map(|m| m.component_mul(&rho_ab.transpose()).sum().re)
            .collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::ShotAborted(format!("outcome probabilities sum to {total}")));
        }
        let k = sample_index(&probs, rng)
            .ok_or_else(|| Error::ShotAborted("measure-prepare has no outcome".into()))?;
        // xy[(x y), (x' y')] = Σ M[(a b), (a' b')] rxa[(x a'), (x' a)] rby[(b' y), (b y')]
        let m = &povm[k];
        let mut xy = Mat4::zeros();
        for (ab, apbp) in (0..4).flat_map(|i| (0..4).map(move |j| (i, j))) {
            let w = m[(ab, apbp)];
            if w == C64::from(0.0) {
                continue;
            }
            let (ai, bi, ap, bp) = (ab >> 1, ab & 1, apbp >> 1, apbp & 1);
            for (xi, xp) in (0..2).flat_map(|i| (0..2).map(move |j| (i, j))) {
                let l = w * rxa[(2 * xi + ap, 2 * xp + ai)];
                for (yi, yp) in (0..2).flat_map(|i| (0..2).map(move |j| (i, j))) {
                    xy[(2 * xi + yi, 2 * xp + yp)] += l * rby[(2 * bp + yi, 2 * bi + yp)];
                }
            }
        }
        let xy = repair4(&xy)?;
        self.set_pair(sa, x, y, &xy);
        self.set_pair(sb, a, b, &to_mat4(mp.prepared()[k].matrix()));
        self.debug_check(&[x, y, a, b]);
        Ok(k)
    }

    /// Computational-basis measurement of one qubit, conditioning its pair.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<u8> {
        self.check_qubit(q)?;
        let s = self.slot[q];
        let pair = &mut self.pairs[s];
        let pos = pair.position(q);
        // Work with the measured qubit as the row index.
        let r = if pos == 0 { pair.r } else { pair.r.transpose() };
        let p0 = (0.5 * (1.0 + r[(3, 0)])).clamp(0.0, 1.0);
        let bit = if rng.random::<f64>() < p0 { 0u8 } else { 1u8 };
        let (sign, p) = if bit == 0 { (1.0, p0) } else { (-1.0, 1.0 - p0) };
        if p < MIN_WEIGHT {
            return Err(Error::ShotAborted(format!("measured outcome of qubit {q} has probability {p:.3e}")));
        }
        // Π ρ Π with Π = (I ± Z)/2 keeps rows I and Z, both ∝ r_0j ± r_3j.
        let mut post = Matrix4::zeros();
        for j in 0..4 {
            let v = 0.5 * (r[(0, j)] + sign * r[(3, j)]) / p;
            post[(0, j)] = v;
            post[(3, j)] = sign * v;
        }
        pair.r = if pos == 0 { post } else { post.transpose() };
        self.debug_check(&[q]);
        Ok(bit)
    }
}
