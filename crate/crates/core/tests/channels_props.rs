use proptest::prelude::*;
use qctol::channels::{self, choi_of_unitary, Channel, MeasurePrepare};
use qctol::qmath::{self, kron, labels, max_abs_diff, min_pt_eigenvalue, outer, BipartiteSplit, ComplexMatrix, DensityMatrix, StateVector, C64};
use qctol::random;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Tr_out C − I/d_in`, computed by summing output diagonal blocks.
fn marginal_error(ch: &Channel) -> f64 {
    let (din, dout) = (1usize << ch.in_qubits(), 1usize << ch.out_qubits());
    let c = ch.choi().matrix();
    let mut worst: f64 = 0.0;
    for i in 0..din {
        for j in 0..din {
            let s: C64 = (0..dout).map(|o| c[(i * dout + o, j * dout + o)]).sum();
            let want = if i == j { 1.0 / din as f64 } else { 0.0 };
            worst = worst.max((s - C64::new(want, 0.0)).norm());
        }
    }
    worst
}

fn max_entangled(d: usize) -> StateVector {
    StateVector::from_fn(d * d, |k, _| if k / d == k % d { C64::new(1.0 / (d as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
}

/// Random measure-prepare channel: POVM `K_k† K_k` from a random channel.
fn random_mp(r: &mut ChaCha8Rng, n: usize) -> MeasurePrepare {
    let d = 1 << n;
    let outcomes = r.random_range(1..5);
    let povm: Vec<ComplexMatrix> = random::channel(n, outcomes, r)
        .kraus()
        .iter()
        .map(|k| k.adjoint() * k)
        .collect();
    let names: Vec<String> = (0..n).map(|q| format!("q{q}")).collect();
    let prepared = (0..povm.len())
        .map(|_| DensityMatrix::new(random::density_matrix(d, r.random_range(1..=d), r), names.clone()).unwrap())
        .collect();
    MeasurePrepare::new(povm, prepared).unwrap()
}

#[test]
fn constructed_channels_preserve_trace() {
    let mut r = rng(10);
    let mut all: Vec<Channel> = vec![
        channels::cnot(),
        channels::hadamard(),
        channels::phase_s(),
        channels::pi8(),
        channels::swap(),
        channels::depolarize(1),
        channels::depolarize(2),
        channels::dephase(),
        channels::identity_channel(3),
        channels::pauli_channel(&[0.1, 0.2, 0.3, 0.4]).unwrap(),
    ];
    for k in 0..60 {
        let n = 1 + k % 2;
        let a = random::channel(n, 1 + k % 4, &mut r);
        let b = random::channel(n, 1 + (k + 1) % 4, &mut r);
        all.push(a.then(&b).unwrap());
        all.push(channels::mix(r.random(), &a, &b).unwrap());
        all.push(Channel::from_measure_prepare(&random_mp(&mut r, n)));
        all.push(a.tensor(&b));
        all.push(Channel::from_choi(a.choi().clone()).unwrap());
        all.push(a);
    }
    for ch in &all {
        assert!(marginal_error(ch) < 1e-9, "{ch}");
        let low = qmath::min_eigenvalue(ch.choi().matrix());
        assert!(low > -1e-9, "{ch}: {low:e} dims {} {}", ch.in_qubits(), ch.out_qubits());
    }
}

#[test]
fn measure_prepare_choi_is_separable() {
    let mut r = rng(11);
    for _ in 0..100 {
        let mp = random_mp(&mut r, 1);
        let ch = Channel::from_measure_prepare(&mp);
        let rho = DensityMatrix::new(ch.choi().matrix().clone(), labels(&["A", "B"])).unwrap();
        let split = BipartiteSplit::new(&["A"], &["B"]).unwrap();
        assert!(min_pt_eigenvalue(&rho, &split).unwrap() >= -1e-9);
        // Σ_k (1/d) M_kᵀ ⊗ ρ_k, each M_kᵀ split into its eigenprojectors.
        let mut recon = ComplexMatrix::zeros(4, 4);
        for (m, prep) in mp.povm().iter().zip(mp.prepared()) {
            let eig = m.transpose().symmetric_eigen();
            for (v, vec) in eig.eigenvalues.iter().zip(eig.eigenvectors.column_iter()) {
                assert!(*v > -1e-12);
                let pure = outer(&vec.into_owned());
                recon += kron(&pure, prep.matrix()).scale(v / 2.0);
            }
        }
        assert!(max_abs_diff(&recon, ch.choi().matrix()) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unitary_choi_transpose_trick(seed in any::<u64>(), parties in 1usize..3) {
        let mut r = rng(seed);
        let d = 1 << parties;
        let u = random::haar_unitary(d, &mut r);
        let phi = max_entangled(d);
        let right = kron(&qmath::identity(d), &u) * &phi;
        let left = kron(&u.transpose(), &qmath::identity(d)) * &phi;
        let choi = choi_of_unitary(&u, parties).unwrap();
        prop_assert!(max_abs_diff(&outer(&right), choi.matrix()) < 1e-12);
        prop_assert!(max_abs_diff(&outer(&left), choi.matrix()) < 1e-12);
    }

    #[test]
    fn ptm_of_composition(seed in any::<u64>(), n in 1usize..3, ka in 1usize..4, kb in 1usize..4) {
        let mut r = rng(seed);
        let a = random::channel(n, ka, &mut r);
        let b = random::channel(n, kb, &mut r);
        let composed = a.then(&b).unwrap().ptm().unwrap();
        let product = b.ptm().unwrap().matrix() * a.ptm().unwrap().matrix();
        let err = (composed.matrix() - product).abs().max();
        prop_assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn kraus_choi_round_trip(seed in any::<u64>(), k in 1usize..5) {
        let mut r = rng(seed);
        let ch = random::channel(1, k, &mut r);
        let back = Channel::from_kraus(&channels::kraus_from_choi(ch.choi()).unwrap());
        prop_assert!(max_abs_diff(back.choi().matrix(), ch.choi().matrix()) < 1e-10);
        let rho = random::density_matrix(2, 2, &mut r);
        let direct: ComplexMatrix = ch.kraus().iter().map(|k| k * &rho * k.adjoint()).sum();
        prop_assert!(max_abs_diff(&ch.act(&rho), &direct) < 1e-10);
    }
}
