mod common;

use common::{gaussian, random_model, rng};
use proptest::prelude::*;
use qcr_core::{
    builtin_model, model::re_tr_rho_xy, sym_product, CotangentVector, RVector, TangentVector,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slds_solve_their_defining_equation(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let m = random_model(&mut rng(seed), d, n);
        for (l, t) in m.slds().iter().zip(m.tangent()) {
            let err = (sym_product(m.rho(), l).unwrap().matrix() - t.matrix()).norm();
            prop_assert!(err <= 1e-10, "residual {err}");
        }
    }

    #[test]
    fn fisher_formulas_agree(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let m = random_model(&mut rng(seed), d, n);
        for i in 0..n {
            for j in 0..n {
                let by_trace = (m.tangent()[j].matrix() * m.slds()[i].matrix()).trace().re;
                let by_inner = re_tr_rho_xy(m.rho(), &m.slds()[i], &m.slds()[j]);
                prop_assert!((m.fisher()[(i, j)] - by_trace).abs() <= 1e-10);
                prop_assert!((m.fisher()[(i, j)] - by_inner).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn slds_have_zero_mean(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let m = random_model(&mut rng(seed), d, n);
        for l in m.slds() {
            let mean = (m.rho().matrix() * l.matrix()).trace().re;
            prop_assert!(mean.abs() <= 1e-10);
        }
    }

    #[test]
    fn pairing_matches_operator_trace(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let mut r = rng(seed);
        let m = random_model(&mut r, d, n);
        let xi = TangentVector(RVector::from_fn(n, |_, _| gaussian(&mut r)));
        let c = CotangentVector(RVector::from_fn(n, |_, _| gaussian(&mut r)));
        let x_op = m.cotangent_operator(&c).unwrap();
        let t_op = m.tangent_operator(&xi).unwrap();
        let by_trace = (x_op.matrix() * t_op.matrix()).trace().re;
        let by_coords = m.pairing(&c, &xi).unwrap();
        prop_assert!((by_trace - by_coords).abs() <= 1e-10 * (1.0 + by_coords.abs()));
        let norm_sq = m.tangent_norm(&xi).unwrap().powi(2);
        prop_assert!((norm_sq - xi.0.dot(&(m.fisher() * &xi.0))).abs() <= 1e-10 * (1.0 + norm_sq));
    }

    #[test]
    fn submodel_fisher_is_principal_block(seed in any::<u64>(), d in 2usize..5) {
        let m = random_model(&mut rng(seed), d, 3);
        let sub = m.submodel(&[0, 2]).unwrap();
        for (a, &i) in [0usize, 2].iter().enumerate() {
            for (b, &j) in [0usize, 2].iter().enumerate() {
                prop_assert!((sub.fisher()[(a, b)] - m.fisher()[(i, j)]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn qubit_fisher_is_diagonal() {
    let m = builtin_model("qubit-full", &[0.6]).unwrap();
    let expected = [1.0, 1.0, 1.0 / (1.0 - 0.36)];
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { expected[i] } else { 0.0 };
            assert!((m.fisher()[(i, j)] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn qutrit_fisher_matches_classical_formula() {
    let p = [0.5, 0.25, 0.25];
    let m = builtin_model("qutrit-diagonal", &p).unwrap();
    let tangents = [[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]];
    for i in 0..2 {
        for j in 0..2 {
            let want: f64 = (0..3).map(|k| tangents[i][k] * tangents[j][k] / p[k]).sum();
            assert!((m.fisher()[(i, j)] - want).abs() < 1e-12);
        }
    }
    let trace_inv = m.fisher_inv().trace();
    assert!((trace_inv - 0.4375).abs() < 1e-12);
}

#[test]
fn invalid_models_are_rejected() {
    assert!(builtin_model("qubit-full", &[1.0]).is_err());
    assert!(builtin_model("qutrit-diagonal", &[0.5, 0.5]).is_err());
    assert!(builtin_model("nope", &[]).is_err());
}
