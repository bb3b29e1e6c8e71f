use proptest::prelude::*;
use srm_core::basis::{
    gen_elementwise, gen_random, gen_simplex, gen_thompson, plane_set, thompson_energy, BasisKind,
    PlaneMode, ThompsonConfig,
};
use srm_core::io::{basis_csv_bytes, basis_fingerprint, parse_basis_csv};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn thompson_descent_never_raises_energy(n in 2usize..6, extra in 0usize..6, seed in 0u64..500) {
        let m = n + 1 + extra;
        let out = gen_thompson(n, m, &ThompsonConfig { seed, iterations: 800, ..Default::default() }).unwrap();
        for w in out.energy_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        for row in out.basis.matrix().row_iter() {
            prop_assert!((row.norm() - 1.0).abs() < 1e-12);
        }
        prop_assert!((thompson_energy(&out.basis) - out.final_energy()).abs() < 1e-9);
    }

    #[test]
    fn simplex_and_elementwise_grams(n in 1usize..12, seed in any::<u64>()) {
        let s = gen_simplex(n, Some(seed)).unwrap();
        let g = s.gram();
        for i in 0..=n {
            for j in 0..=n {
                let want = if i == j { 1.0 } else { -1.0 / n as f64 };
                prop_assert!((g[(i, j)] - want).abs() < 1e-12);
            }
        }
        let e = gen_elementwise(n, Some(seed)).unwrap();
        let g = e.gram();
        for i in 0..2 * n {
            for j in 0..2 * n {
                let want = if i == j { 1.0 } else if i / 2 == j / 2 { -1.0 } else { 0.0 };
                prop_assert!((g[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn basis_csv_round_trip_is_exact(n in 1usize..10, m in 2usize..20, seed in any::<u64>()) {
        let b = gen_random(n, m, seed).unwrap();
        let text = String::from_utf8(basis_csv_bytes(&b)).unwrap();
        let back = parse_basis_csv(&text, BasisKind::Random).unwrap();
        prop_assert_eq!(back.matrix(), b.matrix());
        prop_assert_eq!(basis_fingerprint(&back), basis_fingerprint(&b));
    }

    #[test]
    fn plane_counts(m in 2usize..30) {
        let b = gen_random(3, m, m as u64).unwrap();
        prop_assert_eq!(plane_set(&b, PlaneMode::Combination).unwrap().len(), m * (m - 1) / 2);
        let perm = plane_set(&b, PlaneMode::Permutation).unwrap();
        prop_assert_eq!(perm.len(), m * (m - 1));
        prop_assert!(perm.pairs.windows(2).all(|w| w[0] < w[1]));
    }
}
