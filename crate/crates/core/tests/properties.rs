use proptest::prelude::*;

use ved::circuit::{Ansatz, ShotPolicy, StatePreparation};
use ved::detect::{loss_deterministic, sample_budget};
use ved::linalg::{min_eigenvalue, partial_transpose, trace_norm};
use ved::maps::{direct, MapKind};
use ved::pauli::PauliString;
use ved::rng::uniform_angles;
use ved::states::{random_bipartite, random_product, DensityMatrix, StateFile};

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(0u8..4, n).prop_map(|s| PauliString::new(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_dense((a, b) in (1usize..=3).prop_flat_map(|n| (pauli(n), pauli(n)))) {
        let prod = a.mul(&b).unwrap();
        let dense = &a.matrix() * &b.matrix();
        prop_assert!(prod.matrix().max_abs_diff(&dense) < 1e-14);
    }

    #[test]
    fn pauli_conjugation_matches_dense(p in pauli(2), seed in any::<u64>()) {
        let rho = random_bipartite(2, 2, seed);
        let m = p.matrix();
        let dense = &(&m * rho.mat()) * &m.adjoint();
        prop_assert!(p.conjugate(rho.mat()).unwrap().max_abs_diff(&dense) < 1e-14);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>()) {
        let rho = random_bipartite(2, 4, seed);
        let twice = partial_transpose(&partial_transpose(rho.mat(), 2, 4).unwrap(), 2, 4).unwrap();
        prop_assert_eq!(twice, rho.mat().clone());
        prop_assert!(trace_norm(&partial_transpose(rho.mat(), 2, 4).unwrap()).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn decompositions_match_direct_maps(seed in any::<u64>()) {
        let rho = random_bipartite(2, 4, seed);
        let d = MapKind::Enhanced.decomposition(2).unwrap();
        let dev = d.apply_map(&rho).unwrap().max_abs_diff(&direct::enhanced_b(rho.mat(), 4).unwrap());
        prop_assert!(dev < 1e-12);
        let d = MapKind::Reduction.decomposition(2).unwrap();
        let dev = d.apply_map(&rho).unwrap().max_abs_diff(&direct::reduction_b(rho.mat(), 4).unwrap());
        prop_assert!(dev < 1e-12);
    }

    #[test]
    fn positive_maps_keep_product_states_positive(seed in any::<u64>()) {
        for (kind, side) in [(MapKind::Ppt, 2), (MapKind::Reduction, 2), (MapKind::Enhanced, 4), (MapKind::Choi, 3)] {
            let rho = random_product(side, side, seed);
            let out = kind.decomposition_for(&rho).unwrap().apply_map(&rho).unwrap();
            prop_assert!(min_eigenvalue(&out).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn exact_loss_is_bounded_by_min_eigenvalue(seed in any::<u64>(), kind in prop::sample::select(vec![MapKind::Ppt, MapKind::Reduction, MapKind::ReductionTp])) {
        let a = Ansatz::fig2();
        let rho = random_bipartite(2, 2, seed);
        let d = kind.decomposition(1).unwrap();
        let alpha = uniform_angles(3, seed);
        let l = loss_deterministic(&a, &alpha, &d, &rho, &ShotPolicy::exact()).unwrap();
        let lo = min_eigenvalue(&d.apply_map(&rho).unwrap()).unwrap();
        prop_assert!(l >= lo - 1e-12);
    }

    #[test]
    fn prepared_states_are_normalized(width in 2usize..=4, depth in 1usize..=3, seed in any::<u64>()) {
        let a = Ansatz::layered(width, depth).unwrap();
        let psi = a.prepare(&uniform_angles(a.param_count(), seed)).unwrap();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shot_frequencies_are_valid(v in 0.0f64..=1.0, shots in 1u32..5000, key in any::<u64>()) {
        let f = ShotPolicy::with_shots(shots, 1).frequency(v, key);
        prop_assert!((0.0..=1.0).contains(&f));
        let k = f * shots as f64;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn budget_grows_as_delta_shrinks(gamma in 1.0f64..4.0, delta in 0.01f64..1.0, eps in 0.001f64..1.0) {
        let m = sample_budget(gamma, delta, eps).unwrap();
        let tighter = sample_budget(gamma, delta / 2.0, eps).unwrap();
        prop_assert!(tighter >= m);
        let raw = 2.0 * gamma * gamma * (2.0 / eps).log2() / (delta * delta);
        prop_assert!((m as f64) >= raw - 1e-6 && (m as f64) < raw + 1.0);
    }

    #[test]
    fn state_json_round_trip(seed in any::<u64>()) {
        let rho = random_bipartite(2, 3, seed);
        let text = serde_json::to_string(&StateFile::from_state(&rho)).unwrap();
        let back: DensityMatrix = StateFile::from_json(&text).unwrap().into_state().unwrap();
        prop_assert_eq!(back.mat(), rho.mat());
        prop_assert_eq!((back.dim_a(), back.dim_b()), (2, 3));
    }
}
