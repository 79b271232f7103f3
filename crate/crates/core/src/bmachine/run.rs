//! Monte-Carlo execution of circuits on the pairing-list machine.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bmachine::{Branch, Circuit, Gate, Machine};
use crate::{Error, Result};

/// Bitstring (measure order) → number of shots.
pub type Counts = BTreeMap<String, u64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotResult {
    /// One bit per measured qubit, in the circuit's measure order.
    pub bits: Vec<u8>,
    /// `(gate index, branch)` for every cross-pair gate, when traced.
    pub branch_trace: Option<Vec<(usize, Branch)>>,
}

impl ShotResult {
    pub fn bitstring(&self) -> String {
        self.bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }
}

/// Random stream for one step of one shot: stream = shot, 256 words per step.
pub fn shot_rng(seed: u64, shot: u64, step: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng.set_word_pos((step as u128) << 8);
    rng
}

/// Only cross-pair gates draw randomness, so the generator is built lazily.
fn apply_gate(m: &mut Machine, gate: &Gate, rng: impl FnOnce() -> ChaCha8Rng) -> Result<Option<Branch>> {
    match gate {
        Gate::OneQ { target, ptm, .. } => m.apply_1q(ptm, *target).map(|_| None),
        Gate::TwoQ { targets: [a, b], ptm, spec, .. } => {
            if m.partner(*a) == *b {
                m.apply_2q_in_pair(ptm, *a, *b).map(|_| None)
            } else if let Some(spec) = spec {
                m.apply_2q_cross_pair(spec, *a, *b, &mut rng()).map(Some)
            } else {
                Err(Error::NotPaired(*a, *b))
            }
        }
    }
}

fn execute(c: &Circuit, start: &Machine, seed: u64, shot: u64, trace: bool) -> Result<ShotResult> {
    let mut m = start.clone();
    let mut log = trace.then(Vec::new);
    for (k, gate) in c.gates().iter().enumerate() {
        let branch = apply_gate(&mut m, gate, || shot_rng(seed, shot, k))
            .map_err(|e| Error::ShotAborted(format!("shot {shot}, gate {k}: {e}")))?;
        if let (Some(log), Some(b)) = (log.as_mut(), branch) {
            log.push((k, b));
        }
    }
    let mut bits = Vec::with_capacity(c.measured().len());
    let mut rng = shot_rng(seed, shot, c.gates().len());
    for &q in c.measured() {
        bits.push(m.measure(q, &mut rng)?);
    }
    Ok(ShotResult {
        bits,
        branch_trace: log,
    })
}

/// Initial machine for a circuit; odd registers are padded with an idle qubit.
pub fn init_machine(c: &Circuit) -> Result<Machine> {
    Machine::new(c.init(), true)
}

/// One shot with its branch log.
pub fn sample_shot(c: &Circuit, seed: u64, shot: u64) -> Result<ShotResult> {
    execute(c, &init_machine(c)?, seed, shot, true)
}

/// Runs `shots` independent shots in parallel and aggregates the counts.
pub fn run(c: &Circuit, shots: u64, seed: u64) -> Result<Counts> {
    let start = init_machine(c)?;
    (0..shots)
        .into_par_iter()
        .try_fold(Counts::new, |mut acc, shot| {
            let r = execute(c, &start, seed, shot, false)?;
            *acc.entry(r.bitstring()).or_insert(0) += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(Counts::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })
}

/// Sequential run that also returns every shot's branch log.
pub fn run_with_trace(c: &Circuit, shots: u64, seed: u64) -> Result<Vec<ShotResult>> {
    let start = init_machine(c)?;
    (0..shots).map(|s| execute(c, &start, seed, s, true)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels;

    #[test]
    fn zero_state_measures_zero() {
        let mut c = Circuit::new(1);
        c.measure(&[0]).unwrap();
        let counts = run(&c, 1000, 1).unwrap();
        assert_eq!(counts.get("0"), Some(&1000));
    }

    #[test]
    fn hadamard_is_balanced() {
        let mut c = Circuit::new(2);
        c.one(channels::hadamard(), 0).unwrap().measure(&[0]).unwrap();
        let n = 20_000u64;
        let counts = run(&c, n, 5).unwrap();
        let zeros = *counts.get("0").unwrap() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((zeros - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut c = Circuit::new(4);
        c.one(channels::hadamard(), 0).unwrap();
        c.bient(crate::thresholds::cnot_depolarizing_spec(0.7).unwrap(), 1, 2).unwrap();
        c.measure_all();
        assert_eq!(run(&c, 2000, 11).unwrap(), run(&c, 2000, 11).unwrap());
        let traced = run_with_trace(&c, 50, 11).unwrap();
        assert!(traced.iter().all(|s| s.branch_trace.as_ref().unwrap().len() == 1));
    }

    #[test]
    fn unpaired_plain_gate_is_rejected() {
        let mut c = Circuit::new(4);
        c.two(channels::cnot(), 1, 2).unwrap().measure_all();
        assert!(matches!(sample_shot(&c, 0, 0), Err(Error::ShotAborted(_))));
    }
}
