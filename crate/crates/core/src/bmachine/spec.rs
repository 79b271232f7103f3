//! Executable form of a bi-entangling two-qubit gate.

use crate::channels::{mixture, gates, Channel, ChoiState, KrausSet, MeasurePrepare, CPTP_TOL};
use crate::qmath::{identity, kron, max_abs_diff, ComplexMatrix};
use crate::{Error, Result};

/// A product Kraus operator `a ⊗ b` (`a` on the first target).
#[derive(Clone, Debug, PartialEq)]
pub struct KrausPair {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

impl KrausPair {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        if a.shape() != (2, 2) || b.shape() != (2, 2) {
            return Err(Error::InvalidChannel("Kraus pair factors must be 2×2".into()));
        }
        Ok(KrausPair { a, b })
    }

    pub fn product(&self) -> ComplexMatrix {
        kron(&self.a, &self.b)
    }
}

/// Convex combination of a separable operation, a separable operation after
/// a swap, and a measure-prepare operation.
#[derive(Clone, Debug, PartialEq)]
pub struct BiEntanglingGateSpec {
    weights: [f64; 3],
    separable: Vec<KrausPair>,
    swap: Vec<KrausPair>,
    eb: Option<MeasurePrepare>,
}

fn check_pairs(pairs: &[KrausPair], what: &str) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::InvalidChannel(format!("{what} branch has no Kraus pairs")));
    }
    let sum = pairs
        .iter()
        .fold(ComplexMatrix::zeros(4, 4), |acc, k| {
            let m = k.product();
            acc + m.adjoint() * m
        });
    let err = max_abs_diff(&sum, &identity(4));
    if err > CPTP_TOL {
        return Err(Error::InvalidChannel(format!(
            "{what} branch is not trace preserving (deviation {err:.3e})"
        )));
    }
    Ok(())
}

impl BiEntanglingGateSpec {
    /// Weights are `(separable, swap, eb)`. Branches with zero weight may be
    /// left empty.
    pub fn new(
        weights: [f64; 3],
        separable: Vec<KrausPair>,
        swap: Vec<KrausPair>,
        eb: Option<MeasurePrepare>,
    ) -> Result<Self> {
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidProbability(w));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > CPTP_TOL {
            return Err(Error::InvalidProbability(total));
        }
        if weights[0] > 0.0 {
            check_pairs(&separable, "separable")?;
        }
        if weights[1] > 0.0 {
            check_pairs(&swap, "swap")?;
        }
        if weights[2] > 0.0 {
            match &eb {
                None => return Err(Error::InvalidChannel("eb branch missing".into())),
                Some(mp) if mp.in_dim() != 4 || mp.out_dim() != 4 => {
                    return Err(Error::InvalidChannel("eb branch must act on two qubits".into()))
                }
                Some(_) => {}
            }
        }
        Ok(BiEntanglingGateSpec {
            weights,
            separable,
            swap,
            eb,
        })
    }

    pub fn separable_only(pairs: Vec<KrausPair>) -> Result<Self> {
        Self::new([1.0, 0.0, 0.0], pairs, Vec::new(), None)
    }

    pub fn eb_only(mp: MeasurePrepare) -> Result<Self> {
        Self::new([0.0, 0.0, 1.0], Vec::new(), Vec::new(), Some(mp))
    }

    /// Rejects the spec unless its channel matches `reference` to `tol`.
    pub fn with_reference(self, reference: &ChoiState, tol: f64) -> Result<Self> {
        let err = max_abs_diff(self.channel().choi().matrix(), reference.matrix());
        if err > tol {
            return Err(Error::InvalidChannel(format!(
                "branch mixture differs from reference Choi by {err:.3e}"
            )));
        }
        Ok(self)
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn separable(&self) -> &[KrausPair] {
        &self.separable
    }

    pub fn swap(&self) -> &[KrausPair] {
        &self.swap
    }

    pub fn eb(&self) -> Option<&MeasurePrepare> {
        self.eb.as_ref()
    }

    /// The two-qubit channel this spec implements.
    pub fn channel(&self) -> Channel {
        let mut parts: Vec<(f64, Channel)> = Vec::new();
        if self.weights[0] > 0.0 {
            let ops = self.separable.iter().map(KrausPair::product).collect();
            parts.push((self.weights[0], Channel::from_kraus(&KrausSet::new(ops).expect("checked"))));
        }
        if self.weights[1] > 0.0 {
            let sw = gates::swap();
            let ops = self.swap.iter().map(|k| k.product() * &sw).collect();
            parts.push((self.weights[1], Channel::from_kraus(&KrausSet::new(ops).expect("checked"))));
        }
        if self.weights[2] > 0.0 {
            let mp = self.eb.as_ref().expect("checked");
            parts.push((self.weights[2], Channel::from_measure_prepare(mp)));
        }
        let refs: Vec<(f64, &Channel)> = parts.iter().map(|(w, c)| (*w, c)).collect();
        mixture(&refs).expect("weights checked")
    }
}
