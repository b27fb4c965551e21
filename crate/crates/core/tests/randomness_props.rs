mod common;

use common::{random_model, rng};
use proptest::prelude::*;
use qcr_core::{
    bilinear_table, builtin_model, is_random_model, orthonormal_cotangent_basis,
    randomness::{bilinear_table_in_basis, verdict_from_table},
    CotangentVector, HermitianOperator, RMatrix, StatisticalModel,
};
use rand::Rng;

/// `J`-orthonormal basis rotated by a random orthogonal matrix.
fn rotated_basis(model: &StatisticalModel, r: &mut impl Rng) -> Vec<CotangentVector> {
    let base = orthonormal_cotangent_basis(model);
    let n = base.len();
    let q = RMatrix::from_fn(n, n, |_, _| common::gaussian(r)).qr().q();
    (0..n)
        .map(|k| {
            CotangentVector(
                base.iter()
                    .enumerate()
                    .fold(qcr_core::RVector::zeros(n), |acc, (i, b)| {
                        acc + b.0.scale(q[(i, k)])
                    }),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_is_fisher_orthonormal(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let m = random_model(&mut rng(seed), d, n);
        let basis = orthonormal_cotangent_basis(&m);
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                let gram = bi.0.dot(&(m.fisher() * &bj.0));
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram - expected).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_blocks_have_unit_trace(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let m = random_model(&mut rng(seed), d, n);
        let table = bilinear_table(&m).unwrap();
        for i in 0..n {
            prop_assert!((table.block(i, i).trace() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn verdict_is_basis_independent(seed in any::<u64>(), d in 2usize..4, n in 1usize..4) {
        let mut r = rng(seed);
        let m = random_model(&mut r, d, n);
        let tol = 1e-8;
        let base = is_random_model(&m, tol).unwrap();
        let rotated = verdict_from_table(&bilinear_table_in_basis(&m, rotated_basis(&m, &mut r)).unwrap(), tol);
        prop_assert_eq!(base.verdict, rotated.verdict);
        if let (Some(c1), Some(c2)) = (&base.c, &rotated.c) {
            prop_assert!((c1.matrix() - c2.matrix()).norm() <= 10.0 * tol);
        }
    }

    #[test]
    fn qubit_models_are_random(alpha in -0.95f64..0.95, seed in any::<u64>()) {
        let m = builtin_model("qubit-full", &[alpha]).unwrap();
        let verdict = is_random_model(&m, 1e-8).unwrap();
        prop_assert!(verdict.verdict);
        let complement = HermitianOperator::identity(2).sub(m.rho().op()).unwrap();
        let c = verdict.c.unwrap();
        prop_assert!((c.matrix() - complement.matrix()).norm() <= 1e-10);
        let rotated = verdict_from_table(
            &bilinear_table_in_basis(&m, rotated_basis(&m, &mut rng(seed))).unwrap(),
            1e-8,
        );
        prop_assert!(rotated.verdict);
    }

    #[test]
    fn one_parameter_models_are_random(seed in any::<u64>(), d in 2usize..5) {
        let m = random_model(&mut rng(seed), d, 1);
        prop_assert!(is_random_model(&m, 1e-8).unwrap().verdict);
    }
}

#[test]
fn classical_qutrit_is_not_random() {
    let m = builtin_model("qutrit-diagonal", &[0.5, 0.25, 0.25]).unwrap();
    let verdict = is_random_model(&m, 1e-8).unwrap();
    assert!(!verdict.verdict);
    assert!(verdict.c.is_none());
    let (i, j) = verdict.witness.unwrap();
    assert!(bilinear_table(&m).unwrap().block(i, j).frobenius_norm() > 1e-8 || i == j);
    assert!(verdict.score > 0.1);
}
