use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srm_core::activation::{correction_n, elementwise_tanh, GeneralizedTanh};
use srm_core::basis::{gen_elementwise, gen_random, gen_simplex, gen_thompson, BasisSet, ThompsonConfig};
use srm_core::geometry::random_orthogonal;

fn basis_for(kind: u8, n: usize, seed: u64) -> BasisSet {
    match kind % 4 {
        0 => gen_simplex(n, Some(seed)).unwrap(),
        1 => gen_elementwise(n, Some(seed)).unwrap(),
        2 => gen_random(n, 3 * n, seed).unwrap(),
        _ => gen_thompson(n, 2 * n + 1, &ThompsonConfig { seed, iterations: 400, ..Default::default() })
            .unwrap()
            .basis,
    }
}

fn vec_in(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotating_basis_and_input_commutes(
        kind in 0u8..4,
        seed in 0u64..1000,
        x in vec_in(4, 3.0),
    ) {
        let basis = basis_for(kind, 4, seed);
        let q = random_orthogonal(4, &mut ChaCha8Rng::seed_from_u64(seed + 1));
        let rotated = basis.rotated(&q);
        let plain = GeneralizedTanh::new(basis, true).unwrap();
        let turned = GeneralizedTanh::new(rotated, true).unwrap();
        let x = DVector::from_vec(x);
        let lhs = DVector::from_vec(turned.apply((&q * &x).as_slice()).unwrap());
        let rhs = &q * DVector::from_vec(plain.apply(x.as_slice()).unwrap());
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn output_is_bounded_and_saturates(
        kind in 0u8..4,
        seed in 0u64..1000,
        x in vec_in(3, 1.0),
    ) {
        let basis = basis_for(kind, 3, seed);
        let m = basis.len() as f64;
        let act = GeneralizedTanh::new(basis, true).unwrap();
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        for scale in [1e-3, 1.0, 10.0, 1e3] {
            let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let y = act.apply(&xs).unwrap();
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            // Each of the m terms contributes at most 1 + |N| ≤ m.
            prop_assert!(norm <= m * m);
        }
        let far: Vec<f64> = x.iter().map(|v| v * 1e6).collect();
        let farther: Vec<f64> = x.iter().map(|v| v * 1e7).collect();
        let (a, b) = (act.apply(&far).unwrap(), act.apply(&farther).unwrap());
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn basis_directions_map_to_tanh(seed in 0u64..1000, alpha in 0.0f64..6.0, n in 2usize..7) {
        for basis in [gen_simplex(n, Some(seed)).unwrap(), gen_elementwise(n, Some(seed)).unwrap()] {
            let act = GeneralizedTanh::new(basis.clone(), true).unwrap();
            for j in 0..basis.len() {
                let b = basis.row(j).transpose();
                let y = act.apply((&b * alpha).as_slice()).unwrap();
                let along: f64 = y.iter().zip(b.iter()).map(|(p, q)| p * q).sum();
                prop_assert!((along - alpha.tanh()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plus_minus_basis_is_rotated_elementwise_tanh(seed in 0u64..1000, x in vec_in(5, 4.0)) {
        let act = GeneralizedTanh::new(gen_elementwise(5, Some(seed)).unwrap(), true).unwrap();
        let basis = act.basis().matrix().clone();
        // Even rows are the rotated +e_i.
        let frame = DMatrix::from_fn(5, 5, |r, c| basis[(2 * r, c)]);
        let x = DVector::from_vec(x);
        let coords = &frame * &x;
        let expected = frame.transpose() * DVector::from_vec(elementwise_tanh(coords.as_slice()));
        let got = DVector::from_vec(act.apply(x.as_slice()).unwrap());
        prop_assert!((got - expected).amax() < 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences(
        kind in 0u8..4,
        seed in 0u64..1000,
        x in vec_in(3, 2.0),
        g in vec_in(3, 1.0),
    ) {
        let basis = basis_for(kind, 3, seed);
        let dots: Vec<f64> = basis.matrix().row_iter().map(|b| b.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        // Finite differences straddling a kink of max(0, ·) are meaningless.
        prop_assume!(dots.iter().all(|d| d.abs() > 1e-3));
        let act = GeneralizedTanh::new(basis, true).unwrap();
        let vjp = act.backward(&x, &g).unwrap();
        let f = |x: &[f64]| -> f64 { act.apply(x).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum() };
        let h = 1e-6;
        for k in 0..3 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            prop_assert!((vjp[k] - fd).abs() <= 1e-4 * vjp[k].abs().max(fd.abs()).max(1e-3));
        }
    }

    #[test]
    fn correction_is_zero_at_origin_and_bounded(kind in 0u8..4, seed in 0u64..1000, alpha in 0.0f64..50.0) {
        let basis = basis_for(kind, 4, seed);
        let m = basis.len() as f64;
        prop_assert_eq!(correction_n(&basis, 0.0).unwrap(), 0.0);
        prop_assert!(correction_n(&basis, alpha).unwrap().abs() <= m - 1.0);
    }
}
