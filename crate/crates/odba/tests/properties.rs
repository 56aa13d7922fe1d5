use odba::bae::{a_bar, d_bar, eval_q_functions, Branch, BetheRootSet, TQContext};
use odba::lattice::transfer_matrix;
use odba::tensor::c;
use odba::verify::verify_identity;
use odba::{ModelParams, C64};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = C64> {
    (-0.9f64..0.9, -0.9f64..0.9).prop_map(|(re, im)| c(re, im))
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn yang_baxter_holds(u in point(), v in point(), w in point()) {
        let params = ModelParams::real(1, 1.5, 2.5, 0.4, &[0.1]).unwrap();
        let r = verify_identity("qybe", &params, &[u, v, w], 1e-10).unwrap();
        prop_assert!(r.passed, "{}", r.residual);
    }

    #[test]
    fn transfer_matrix_crossing(u in point(), p in 0.7f64..3.0, xi in 0.0f64..2.0) {
        let params = ModelParams::real(2, p, 1.9, xi, &[0.17, -0.29]).unwrap();
        let a = transfer_matrix(u, &params);
        let b = transfer_matrix(-u - 1.0, &params);
        let scale = a.entries().norm().max(1.0);
        prop_assert!((a.entries() - b.entries()).norm() / scale < 1e-12);
    }

    #[test]
    fn q_functions_pair_under_crossing(u in point(), l in point(), m in point(), n in point()) {
        let roots = BetheRootSet::new(Branch::Plus, vec![l], vec![m], vec![n]).unwrap();
        let (q, q1, _) = eval_q_functions(u, &roots);
        let (qc, _, q2c) = eval_q_functions(-u - 1.0, &roots);
        prop_assert!(rel(q, qc) < 1e-12);
        prop_assert!(rel(q1, q2c) < 1e-12);
    }

    #[test]
    fn a_bar_crossing_gives_d_bar(u in point(), xi in 0.0f64..2.0, minus in any::<bool>()) {
        let params = ModelParams::real(2, 1.3, 2.1, xi, &[0.21, -0.33]).unwrap();
        let branch = if minus { Branch::Minus } else { Branch::Plus };
        let ctx = TQContext::new(&params, branch).unwrap();
        prop_assume!((u * 2.0 + 1.0).norm() > 0.05);
        prop_assert!(rel(a_bar(-u - 1.0, &ctx), d_bar(u, &ctx)) < 1e-12);
    }
}
