//! Nonnegative least squares, stabilizer-state dictionaries and a small
//! cutting-plane solver for eigenvalue-constrained LPs.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::channels::gates;
use crate::qmath::{
    apply_left, basis_state, eigh, hs_inner, outer, pauli_expand_matrix, ComplexMatrix, StateVector,
};
use crate::{Error, Result};

/// Solution of `min ‖A x − b‖₂` subject to `x ≥ 0`.
#[derive(Clone, Debug)]
pub struct Nnls {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Lawson-Hanson active-set NNLS.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Nnls {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "right-hand side length");
    let scale = a.abs().max().max(b.abs().max()).max(1.0);
    let tol = 1e-12 * scale * scale * (m.max(n) as f64);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0;
    let mut residual = b - a * &x;
    let mut w = a.tr_mul(&residual);

    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate.filter(|&j| w[j] > tol) else {
            break;
        };
        if iterations >= max_iter {
            break;
        }
        passive[j] = true;
        loop {
            iterations += 1;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s = solve_passive(a, b, &idx);
            if s.iter().all(|&v| v > 0.0) {
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = s[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if s[k] <= 0.0 {
                    let denom = x[col] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[col] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (s[k] - x[col]);
                if x[col] <= 1e-15 {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
            if iterations >= max_iter {
                break;
            }
        }
        residual = b - a * &x;
        w = a.tr_mul(&residual);
    }
    Nnls {
        residual: residual.norm(),
        x,
        iterations,
    }
}

/// Least squares restricted to the columns `idx` (normal equations, with an
/// SVD fallback for rank-deficient blocks).
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(idx);
    let gram = sub.tr_mul(&sub);
    let rhs = sub.tr_mul(b);
    if let Some(ch) = gram.clone().cholesky() {
        let s = ch.solve(&rhs);
        if s.iter().all(|v| v.is_finite()) {
            return s;
        }
    }
    sub.svd(true, true)
        .solve(b, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(idx.len()))
}

/// Convex decomposition of a Hermitian target over Hermitian atoms.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// `(atom index, weight)` with weight > 0.
    pub terms: Vec<(usize, f64)>,
    /// Largest entrywise deviation of `Σ w_k atom_k` from the target.
    pub error: f64,
}

/// Finds nonnegative weights with `Σ w_k atoms_k ≈ target` by NNLS on the
/// real Pauli coordinates. Trace matching makes the weights sum to the
/// target's trace when atoms have unit trace.
pub fn decompose(target: &ComplexMatrix, atoms: &[ComplexMatrix]) -> Result<Decomposition> {
    if atoms.is_empty() {
        return Err(Error::InvalidMatrix("empty dictionary".into()));
    }
    let rows = target.nrows() * target.nrows();
    let mut a = DMatrix::<f64>::zeros(rows, atoms.len());
    for (k, atom) in atoms.iter().enumerate() {
        if atom.shape() != target.shape() {
            return Err(Error::InvalidMatrix("atom shape differs from target".into()));
        }
        let v = pauli_expand_matrix(atom);
        a.set_column(k, &DVector::from_vec(v));
    }
    let b = DVector::from_vec(pauli_expand_matrix(target));
    let sol = nnls(&a, &b, 20 * rows + 100);
    let terms: Vec<(usize, f64)> = sol
        .x
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| (k, w))
        .collect();
    let recon = terms
        .iter()
        .fold(ComplexMatrix::zeros(target.nrows(), target.ncols()), |acc, &(k, w)| {
            acc + atoms[k].scale(w)
        });
    let error = crate::qmath::max_abs_diff(&recon, target);
    Ok(Decomposition { terms, error })
}

/// All stabilizer states on one or two qubits (6 and 60), up to phase.
pub fn stabilizer_states(n: usize) -> Vec<StateVector> {
    assert!((1..=2).contains(&n), "stabilizer enumeration supports 1 or 2 qubits");
    let h = gates::hadamard();
    let s = gates::phase_s();
    let mut gens: Vec<(ComplexMatrix, Vec<usize>)> = Vec::new();
    for q in 0..n {
        gens.push((h.clone(), vec![q]));
        gens.push((s.clone(), vec![q]));
    }
    if n == 2 {
        gens.push((gates::cnot(), vec![0, 1]));
    }
    let mut states = vec![basis_state(n, 0)];
    let mut frontier = states.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for psi in &frontier {
            for (g, t) in &gens {
                let m = ComplexMatrix::from_column_slice(psi.len(), 1, psi.as_slice());
                let out = apply_left(g, &m, n, t);
                let phi = StateVector::from_column_slice(out.as_slice());
                let known = states
                    .iter()
                    .any(|s| (s.dotc(&phi)).norm() > 1.0 - 1e-9);
                if !known {
                    states.push(phi.clone());
                    next.push(phi);
                }
            }
        }
        frontier = next;
    }
    states
}

/// Projectors `|φ⟩⟨φ|` of the stabilizer states on `n ≤ 2` qubits.
pub fn stabilizer_projectors(n: usize) -> Vec<ComplexMatrix> {
    stabilizer_states(n).iter().map(outer).collect()
}

/// Result of maximizing a linear objective subject to
/// `Σ_k x_k H_k ⪰ t I`-style eigenvalue cuts.
#[derive(Clone, Debug)]
pub struct CutLp {
    pub x: Vec<f64>,
    pub value: f64,
    pub min_eigenvalue: f64,
    pub rounds: usize,
}

/// Maximizes `objective · x + weight_t · t` over the probability simplex in
/// `x` subject to `λ_min(base + Σ_k x_k H_k) ≥ t` and `t ≥ t_floor`, using
/// Kelley cuts `⟨v|base + Σ x_k H_k|v⟩ ≥ t`. Cuts are seeded with the
/// provided vectors and refined with the current minimum eigenvector.
pub fn eigen_cut_lp(
    base: &ComplexMatrix,
    terms: &[ComplexMatrix],
    objective: &[f64],
    weight_t: f64,
    t_floor: f64,
    seeds: &[StateVector],
    tol: f64,
) -> Result<CutLp> {
    let k = terms.len();
    assert_eq!(objective.len(), k);
    let mut cuts: Vec<StateVector> = seeds.to_vec();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let xs: Vec<_> = (0..k)
            .map(|j| problem.add_var(objective[j], (0.0, 1.0)))
            .collect();
        let t = problem.add_var(weight_t, (t_floor, 1.0));
        problem.add_constraint(
            xs.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(),
            ComparisonOp::Eq,
            1.0,
        );
        for v in &cuts {
            let b0 = hs_inner_vec(v, base);
            let mut expr: Vec<_> = xs
                .iter()
                .zip(terms)
                .map(|(&var, h)| (var, -hs_inner_vec(v, h)))
                .collect();
            expr.push((t, 1.0));
            problem.add_constraint(expr, ComparisonOp::Le, b0);
        }
        let sol = problem
            .solve()
            .map_err(|e| Error::Lp(e.to_string()))?;
        let x: Vec<f64> = xs.iter().map(|&v| sol[v]).collect();
        let tv = sol[t];
        let m = terms
            .iter()
            .zip(&x)
            .fold(base.clone(), |acc, (h, &w)| acc + h.scale(w));
        let (vals, vecs) = eigh(&m);
        let lo = vals[0];
        if lo >= tv - tol || rounds >= 200 {
            let value = objective.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + weight_t * lo.min(tv);
            return Ok(CutLp {
                x,
                value,
                min_eigenvalue: lo,
                rounds,
            });
        }
        cuts.push(vecs.column(0).into_owned());
    }
}

/// `⟨v|M|v⟩` (real part).
fn hs_inner_vec(v: &StateVector, m: &ComplexMatrix) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// Hilbert-Schmidt overlap helper re-exported for dictionary code.
pub fn overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    hs_inner(a, b).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{identity, kron, max_abs_diff};

    #[test]
    fn nnls_recovers_nonnegative_solution() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        let x_true = DVector::from_vec(vec![0.5, 0.0, 2.0]);
        let b = &a * &x_true;
        let sol = nnls(&a, &b, 100);
        assert!((sol.x - x_true).norm() < 1e-10);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn nnls_clamps_negative_directions() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let sol = nnls(&a, &b, 100);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.x[1], 0.0);
        assert!((sol.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stabilizer_counts() {
        assert_eq!(stabilizer_states(1).len(), 6);
        assert_eq!(stabilizer_states(2).len(), 60);
    }

    #[test]
    fn stabilizer_states_form_a_two_design() {
        // (1/60) Σ |φ⟩⟨φ| ⊗ |φ*⟩⟨φ*| = (I + 4 Φ)/20 with Φ maximally entangled.
        let states = stabilizer_states(2);
        let mut avg = ComplexMatrix::zeros(16, 16);
        for s in &states {
            let conj = s.map(|z| z.conj());
            avg += kron(&outer(s), &outer(&conj));
        }
        avg /= crate::qmath::real(states.len() as f64);
        let mut phi = StateVector::zeros(16);
        for i in 0..4 {
            phi[i * 4 + i] = crate::qmath::real(0.5);
        }
        let expected = (identity(16) + outer(&phi).scale(4.0)).scale(1.0 / 20.0);
        assert!(max_abs_diff(&avg, &expected) < 1e-12);
    }

    #[test]
    fn decompose_mixed_qubit_over_stabilizers() {
        let atoms = stabilizer_projectors(1);
        let d = decompose(&identity(2).scale(0.5), &atoms).unwrap();
        assert!(d.error < 1e-12);
        let total: f64 = d.terms.iter().map(|t| t.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cut_lp_finds_max_mixing_weight() {
        // max x0 with x0·diag(1,-1) + x1·I ⪰ 0: x0 = 1/2.
        let mut z = ComplexMatrix::identity(2, 2);
        z[(1, 1)] = crate::qmath::real(-1.0);
        let terms = vec![z, identity(2)];
        let base = ComplexMatrix::zeros(2, 2);
        let sol = eigen_cut_lp(&base, &terms, &[1.0, 0.0], 0.0, 0.0, &[], 1e-12).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-9, "{:?}", sol.x);
    }
}
