//! Full density-matrix evolution of small circuits and a goodness-of-fit
//! check for sampled counts.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bmachine::{Circuit, Counts};
use crate::qmath::{kron, ComplexMatrix, DensityMatrix};
use crate::{Error, Result};

pub const MAX_QUBITS: usize = 8;

/// Bitstring (measure order) → exact probability.
pub type Distribution = BTreeMap<String, f64>;

#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    rho: DensityMatrix,
}

impl DenseState {
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.rho.matrix()
    }

    /// Outcome distribution of a computational-basis measurement of
    /// `qubits`, bitstrings in the given order. All `2^k` outcomes appear.
    pub fn distribution(&self, qubits: &[usize]) -> Distribution {
        let m = self.matrix();
        let mut out = Distribution::new();
        for idx in 0..(1usize << qubits.len()) {
            let key: String = (0..qubits.len())
                .map(|k| if (idx >> (qubits.len() - 1 - k)) & 1 == 1 { '1' } else { '0' })
                .collect();
            out.insert(key, 0.0);
        }
        for i in 0..m.nrows() {
            let key: String = qubits
                .iter()
                .map(|&q| if (i >> (self.n - 1 - q)) & 1 == 1 { '1' } else { '0' })
                .collect();
            *out.get_mut(&key).expect("all keys present") += m[(i, i)].re;
        }
        out
    }

    /// Probability of `bits` on `qubits` and the normalized post-measurement
    /// state (`None` when the outcome has probability below 1e-14).
    pub fn project(&self, qubits: &[usize], bits: &[u8]) -> (f64, Option<DenseState>) {
        let m = self.matrix();
        let dim = m.nrows();
        let keep: Vec<bool> = (0..dim)
            .map(|i| {
                qubits
                    .iter()
                    .zip(bits)
                    .all(|(&q, &b)| ((i >> (self.n - 1 - q)) & 1) as u8 == b)
            })
            .collect();
        let post = ComplexMatrix::from_fn(dim, dim, |i, j| {
            if keep[i] && keep[j] {
                m[(i, j)]
            } else {
                crate::qmath::ZERO
            }
        });
        let p = post.trace().re;
        if p < 1e-14 {
            return (p.max(0.0), None);
        }
        let rho = DensityMatrix::new_unchecked(post.unscale(p), self.rho.labels().to_vec());
        (p, Some(DenseState { n: self.n, rho }))
    }

    /// Reduced state of one qubit.
    pub fn qubit(&self, q: usize) -> ComplexMatrix {
        crate::qmath::trace_out(self.matrix(), self.n, &[q])
    }
}

/// Evolves the circuit's full density matrix gate by gate.
pub fn run_dense_state(c: &Circuit) -> Result<DenseState> {
    let n = c.n_qubits();
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { max: MAX_QUBITS, got: n });
    }
    let mut m = c
        .init()
        .iter()
        .fold(ComplexMatrix::identity(1, 1), |acc, r| kron(&acc, r.matrix()));
    for gate in c.gates() {
        m = gate.channel().act_on(&m, n, &gate.targets())?;
    }
    let labels = (0..n).map(|q| format!("q{q}")).collect();
    Ok(DenseState {
        n,
        rho: DensityMatrix::new_unchecked(m, labels),
    })
}

/// Exact distribution of the circuit's final measurement.
pub fn run_dense(c: &Circuit) -> Result<Distribution> {
    Ok(run_dense_state(c)?.distribution(c.measured()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRow {
    pub outcome: String,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub shots: u64,
    pub tv_distance: f64,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_pvalue: f64,
    pub alpha: f64,
    pub pass: bool,
    pub table: Vec<OutcomeRow>,
}

/// Minimum expected count for a bin of its own; smaller bins are pooled.
const MIN_EXPECTED: f64 = 5.0;

/// Total-variation distance and Pearson chi-square test of `counts`
/// against `exact`. Observed outcomes with zero exact probability fail
/// outright.
pub fn compare(counts: &Counts, exact: &Distribution, alpha: f64) -> ComparisonReport {
    let shots: u64 = counts.values().sum();
    let n = shots.max(1) as f64;
    let mut keys: Vec<&String> = exact.keys().chain(counts.keys()).collect();
    keys.sort();
    keys.dedup();

    let mut table = Vec::with_capacity(keys.len());
    let mut tv = 0.0;
    let mut impossible = false;
    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for key in keys {
        let observed = counts.get(key).copied().unwrap_or(0);
        let p = exact.get(key).copied().unwrap_or(0.0).max(0.0);
        tv += (observed as f64 / n - p).abs();
        let e = p * n;
        if p < 1e-15 {
            impossible |= observed > 0;
        } else if e >= MIN_EXPECTED {
            chi2 += (observed as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_obs += observed as f64;
            pooled_exp += e;
        }
        table.push(OutcomeRow {
            outcome: key.clone(),
            observed,
            expected: p,
        });
    }
    if pooled_exp > 0.0 {
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    let dof = bins.saturating_sub(1);
    let chi2_pvalue = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(chi2)
    };
    ComparisonReport {
        shots,
        tv_distance: 0.5 * tv,
        chi2,
        dof,
        chi2_pvalue,
        alpha,
        pass: chi2_pvalue > alpha,
        table,
    }
}
