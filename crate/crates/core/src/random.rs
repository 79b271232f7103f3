//! Random states, unitaries and channels for sampling-based checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{Channel, KrausSet};
use crate::qmath::{c, qubit_count, ComplexMatrix, StateVector, C64};

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase fix on R).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> StateVector {
    let v = StateVector::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = v.norm();
    v.unscale(norm)
}

/// Random density matrix `G G† / Tr` with `G` of shape `d × rank`.
pub fn density_matrix<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m.unscale(tr);
    (&m + m.adjoint()).scale(0.5)
}

/// Random CPTP map on `n_qubits` with `n_kraus` operators, from the blocks
/// of a Haar isometry.
pub fn channel<R: Rng + ?Sized>(n_qubits: usize, n_kraus: usize, rng: &mut R) -> Channel {
    let d = 1 << n_qubits;
    let k = n_kraus.max(1);
    let u = haar_unitary(d * k, rng);
    let ops = (0..k)
        .map(|j| u.view((j * d, 0), (d, d)).into_owned())
        .collect();
    Channel::from_kraus(&KrausSet::new(ops).expect("isometry blocks are trace preserving"))
}

/// Random Bloch vector inside the unit ball.
pub fn bloch_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let r: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if r.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return r;
        }
    }
}

/// Tensor product of `n` independent Haar single-qubit pure states.
pub fn product_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let mut v = StateVector::from_element(1, C64::new(1.0, 0.0));
    for _ in 0..n {
        v = v.kronecker(&haar_state(2, rng));
    }
    debug_assert_eq!(qubit_count(v.len()).unwrap(), n);
    v
}
