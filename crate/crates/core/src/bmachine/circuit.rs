//! Circuits of one- and two-qubit channels on a register of single qubits.

use crate::bmachine::BiEntanglingGateSpec;
use crate::channels::{Channel, Ptm};
use crate::qmath::{DensityMatrix, StateVector};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub enum Gate {
    OneQ {
        target: usize,
        channel: Channel,
        ptm: Ptm,
    },
    /// A two-qubit channel. Without a spec it can only act on qubits that
    /// currently share a pair.
    TwoQ {
        targets: [usize; 2],
        channel: Channel,
        ptm: Ptm,
        spec: Option<BiEntanglingGateSpec>,
    },
}

impl Gate {
    pub fn one(channel: Channel, target: usize) -> Result<Self> {
        if channel.arity() != Some(1) {
            return Err(Error::InvalidCircuit("1q gate needs a single-qubit channel".into()));
        }
        let ptm = channel.ptm()?;
        Ok(Gate::OneQ { target, channel, ptm })
    }

    pub fn two(channel: Channel, a: usize, b: usize) -> Result<Self> {
        if channel.arity() != Some(2) {
            return Err(Error::InvalidCircuit("2q gate needs a two-qubit channel".into()));
        }
        let ptm = channel.ptm()?;
        Ok(Gate::TwoQ {
            targets: [a, b],
            channel,
            ptm,
            spec: None,
        })
    }

    pub fn bient(spec: BiEntanglingGateSpec, a: usize, b: usize) -> Result<Self> {
        let channel = spec.channel();
        let ptm = channel.ptm()?;
        Ok(Gate::TwoQ {
            targets: [a, b],
            channel,
            ptm,
            spec: Some(spec),
        })
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::OneQ { target, .. } => vec![*target],
            Gate::TwoQ { targets, .. } => targets.to_vec(),
        }
    }

    pub fn channel(&self) -> &Channel {
        match self {
            Gate::OneQ { channel, .. } | Gate::TwoQ { channel, .. } => channel,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    init: Vec<DensityMatrix>,
    gates: Vec<Gate>,
    measure: Vec<usize>,
}

fn qubit_label(q: usize) -> String {
    format!("q{q}")
}

/// `|0⟩`, `|1⟩`, `|+⟩`, `|−⟩`, `|+i⟩`, `|−i⟩` or `I/2` by short name.
pub fn named_state(name: &str) -> Result<DensityMatrix> {
    let r = match name {
        "0" => [0.0, 0.0, 1.0],
        "1" => [0.0, 0.0, -1.0],
        "+" => [1.0, 0.0, 0.0],
        "-" => [-1.0, 0.0, 0.0],
        "+i" => [0.0, 1.0, 0.0],
        "-i" => [0.0, -1.0, 0.0],
        "mixed" => [0.0, 0.0, 0.0],
        other => return Err(Error::InvalidState(format!("unknown state name {other:?}"))),
    };
    DensityMatrix::from_bloch(r, "q")
}

impl Circuit {
    /// `n_qubits` qubits in `|0⟩`, no gates, nothing measured.
    pub fn new(n_qubits: usize) -> Self {
        let zero = named_state("0").expect("valid");
        let init = (0..n_qubits)
            .map(|q| zero.clone().relabel(vec![qubit_label(q)]).expect("one label"))
            .collect();
        Circuit {
            n_qubits,
            init,
            gates: Vec::new(),
            measure: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn init(&self) -> &[DensityMatrix] {
        &self.init
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured(&self) -> &[usize] {
        &self.measure
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::InvalidCircuit(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn set_init(&mut self, q: usize, rho: DensityMatrix) -> Result<&mut Self> {
        self.check_qubit(q)?;
        if rho.n_qubits() != 1 {
            return Err(Error::InvalidCircuit("initial states are single-qubit".into()));
        }
        self.init[q] = rho.relabel(vec![qubit_label(q)])?;
        Ok(self)
    }

    pub fn set_init_pure(&mut self, q: usize, psi: &StateVector) -> Result<&mut Self> {
        let rho = DensityMatrix::from_pure(psi, vec![qubit_label(q)])?;
        self.set_init(q, rho)
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        let targets = gate.targets();
        for &q in &targets {
            self.check_qubit(q)?;
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::InvalidCircuit(format!("repeated target {}", targets[0])));
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn one(&mut self, channel: Channel, target: usize) -> Result<&mut Self> {
        self.push(Gate::one(channel, target)?)
    }

    pub fn two(&mut self, channel: Channel, a: usize, b: usize) -> Result<&mut Self> {
        self.push(Gate::two(channel, a, b)?)
    }

    pub fn bient(&mut self, spec: BiEntanglingGateSpec, a: usize, b: usize) -> Result<&mut Self> {
        self.push(Gate::bient(spec, a, b)?)
    }

    pub fn measure(&mut self, qubits: &[usize]) -> Result<&mut Self> {
        for &q in qubits {
            self.check_qubit(q)?;
            if self.measure.contains(&q) {
                return Err(Error::InvalidCircuit(format!("qubit {q} measured twice")));
            }
            self.measure.push(q);
        }
        Ok(self)
    }

    pub fn measure_all(&mut self) -> &mut Self {
        self.measure = (0..self.n_qubits).collect();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels;

    #[test]
    fn builder_validates_targets() {
        let mut c = Circuit::new(2);
        assert!(c.one(channels::hadamard(), 2).is_err());
        assert!(c.two(channels::cnot(), 1, 1).is_err());
        assert!(c.one(channels::cnot(), 0).is_err());
        c.one(channels::hadamard(), 0).unwrap().two(channels::cnot(), 0, 1).unwrap();
        assert_eq!(c.gates().len(), 2);
        assert!(c.measure(&[0, 0]).is_err());
    }

    #[test]
    fn named_states() {
        let plus = named_state("+").unwrap();
        assert!((plus.bloch()[0] - 1.0).abs() < 1e-12);
        assert!(named_state("2").is_err());
    }
}
