mod common;

use common::*;
use hamlearn_core::linalg_ad::TangentBundle;
use hamlearn_core::mps::Sweep;
use hamlearn_core::{BitString, Mps, Pauli, PauliBasis, C64};
use proptest::prelude::*;

fn normalized(v: Vec<C64>) -> Vec<C64> {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / nrm).collect()
}

fn amplitudes(psi: &Mps) -> Vec<C64> {
    (0..1usize << psi.n()).map(|i| psi.amplitude(&BitString::from_index(i, psi.n())).unwrap()).collect()
}

#[test]
fn random_mps_amplitudes_match_index_sum() {
    let mut r = rng(1);
    for trial in 0..10 {
        let sites = random_sites(&mut r, &[2, 4, 2]);
        let dense = normalized(dense_from_sites(&sites));
        let psi = Mps::from_tensors(sites, 4).unwrap();
        let amps = amplitudes(&psi);
        let err = vec_dist(&amps, &dense);
        assert!(err < 1e-12, "trial {trial}: {err:e}");
        assert!(vec_dist(&psi.to_statevector().unwrap(), &dense) < 1e-12);
    }
}

#[test]
fn random_unitaries_match_dense_application() {
    let mut r = rng(2);
    let n = 4;
    let mut psi = Mps::product_state(n).unwrap();
    let mut dense = psi.to_statevector().unwrap();
    for step in 0..30 {
        let i = step % (n - 1);
        let g = random_unitary(&mut r, 4);
        psi = psi.apply_two_site_gate(i, &TangentBundle::constant(g.clone()), 16).unwrap();
        dense = dense_apply_two(&dense, n, i, &g);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }
    let err = vec_dist(&amplitudes(&psi), &dense);
    assert!(err < 1e-10, "{err:e}");
    assert_eq!(psi.discarded_weight(), 0.0);
}

#[test]
fn both_sweep_directions_agree() {
    let mut r = rng(3);
    let n = 5;
    let gates: Vec<_> = (0..12).map(|_| random_unitary(&mut r, 4)).collect();
    let mut a = Mps::product_state(n).unwrap();
    let mut b = Mps::product_state(n).unwrap();
    for (s, g) in gates.iter().enumerate() {
        let i = (s * 3) % (n - 1);
        let g = TangentBundle::constant(g.clone());
        a.apply_gate_mut(i, &g, 32, Sweep::Right).unwrap();
        b.apply_gate_mut(i, &g, 32, Sweep::Left).unwrap();
    }
    assert!(vec_dist(&amplitudes(&a), &amplitudes(&b)) < 1e-12);
}

#[test]
fn truncation_records_discarded_weight_and_keeps_norm() {
    let mut r = rng(4);
    let n = 6;
    let mut psi = Mps::product_state(n).unwrap();
    for s in 0..40 {
        let g = TangentBundle::constant(random_unitary(&mut r, 4));
        psi = psi.apply_two_site_gate(s % (n - 1), &g, 2).unwrap();
        assert!(psi.bond_dims().iter().all(|&d| d <= 2));
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-8);
    }
    assert!(psi.discarded_weight() > 0.0);
}

#[test]
fn probabilities_sum_to_one_up_to_ten_sites() {
    let mut r = rng(5);
    for n in [2, 5, 10] {
        let bonds: Vec<usize> = (0..n - 1).map(|i| (1usize << (i + 1).min(n - 1 - i)).min(4)).collect();
        let psi = Mps::from_tensors(random_sites(&mut r, &bonds), 4).unwrap();
        let total: f64 = amplitudes(&psi).iter().map(|z| z.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-8, "n={n}: {total}");
    }
}

#[test]
fn rotation_matches_dense_single_site_unitaries() {
    let mut r = rng(6);
    let n = 4;
    let psi = Mps::from_tensors(random_sites(&mut r, &[2, 4, 2]), 4).unwrap();
    let basis: PauliBasis = "XYZY".parse().unwrap();
    let mut dense = psi.to_statevector().unwrap();
    for (i, p) in basis.axes().iter().enumerate() {
        dense = dense_apply_one(&dense, n, i, &p.rotation_tensor());
    }
    let rotated = psi.rotate_to_basis(&basis).unwrap();
    assert!(vec_dist(&amplitudes(&rotated), &dense) < 1e-12);
}

#[test]
fn rephasing_a_bond_changes_nothing_observable() {
    let mut r = rng(7);
    let mut psi = Mps::from_tensors(random_sites(&mut r, &[2, 4, 2]), 4).unwrap();
    let before = amplitudes(&psi);
    let phases: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, 0.7 * k as f64 + 0.3)).collect();
    psi.rephase_bond(1, &phases).unwrap();
    assert!(vec_dist(&amplitudes(&psi), &before) < 1e-13);
}

fn exact_distribution(psi: &Mps, basis: &PauliBasis) -> Vec<f64> {
    amplitudes(&psi.rotate_to_basis(basis).unwrap()).iter().map(|z| z.norm_sqr()).collect()
}

fn tv(samples: &[BitString], p: &[f64]) -> f64 {
    let mut freq = vec![0.0; p.len()];
    for s in samples {
        freq[s.index()] += 1.0 / samples.len() as f64;
    }
    0.5 * freq.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[test]
fn sampling_total_variation_n4() {
    let mut r = rng(8);
    let psi = Mps::from_tensors(random_sites(&mut r, &[2, 4, 2]), 4).unwrap();
    for (k, basis) in ["ZZZZ", "XYZX", "YYYY"].iter().enumerate() {
        let basis: PauliBasis = basis.parse().unwrap();
        let p = exact_distribution(&psi, &basis);
        let draws = psi.sample(&basis, 100_000, 100 + k as u64).unwrap();
        let d = tv(&draws, &p);
        println!("basis {basis}: TV {d:.4}");
        assert!(d <= 0.01, "{basis}: {d}");
    }
}

fn basis_strategy(n: usize) -> impl Strategy<Value = PauliBasis> {
    proptest::collection::vec(prop_oneof![Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)], n).prop_map(PauliBasis::new)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rotate_and_unrotate_is_identity(seed in 0u64..1000, basis in basis_strategy(4)) {
        let mut r = rng(seed);
        let psi = Mps::from_tensors(random_sites(&mut r, &[2, 3, 2]), 4).unwrap();
        let back = psi.rotate_to_basis(&basis).unwrap().rotate_from_basis(&basis).unwrap();
        prop_assert!(vec_dist(&amplitudes(&back), &amplitudes(&psi)) < 1e-12);
    }

    #[test]
    fn unitary_gates_preserve_norm(seed in 0u64..1000, bonds in proptest::collection::vec(0usize..4, 1..12)) {
        let mut r = rng(seed);
        let mut psi = Mps::product_state(5).unwrap();
        for i in bonds {
            let g = TangentBundle::constant(random_unitary(&mut r, 4));
            psi = psi.apply_two_site_gate(i, &g, 64).unwrap();
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn empirical_frequencies_converge(seed in 0u64..1000, basis in basis_strategy(3)) {
        let mut r = rng(seed);
        let psi = Mps::from_tensors(random_sites(&mut r, &[2, 2]), 2).unwrap();
        let m = 10_000;
        let draws = psi.sample(&basis, m, seed).unwrap();
        prop_assert!(tv(&draws, &exact_distribution(&psi, &basis)) <= 3.0 / (m as f64).sqrt());
    }
}
