use ndarray::Array2;
use proptest::prelude::*;
use smfr::altmin::{fit_fixed_m, SolverConfig, UpdateScheme};
use smfr::objective::objective;
use smfr::subsolvers::{elastic_net_a, kkt_residual_a, kkt_residual_b, lasso_columns, InnerOptions};
use smfr::Penalties;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lasso_solution_is_stationary(h in matrix(12, 5), y in matrix(12, 2), frac in 0.0f64..1.2) {
        let lam = frac * h.t().dot(&y).iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let (b, rep) = lasso_columns(h.view(), y.view(), lam, &InnerOptions::default()).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(kkt_residual_b(h.view(), y.view(), b.view(), lam) <= 1e-7);
        if frac >= 1.0 {
            prop_assert!(b.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn a_step_is_stationary(x in matrix(10, 6), y in matrix(10, 3), b in matrix(2, 3), l1 in 0.0f64..2.0, l3 in 0.01f64..2.0) {
        let (a, rep) = elastic_net_a(x.view(), y.view(), b.view(), l1, l3, &InnerOptions::default()).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(kkt_residual_a(x.view(), y.view(), a.view(), b.view(), l1, l3) <= 1e-7);
    }

    #[test]
    fn fits_never_end_above_their_start(x in matrix(15, 6), y in matrix(15, 4), seed in 0u64..1000) {
        let pen = Penalties::new(0.5, 0.5, 0.3).unwrap();
        for scheme in [UpdateScheme::Basic, UpdateScheme::default()] {
            let cfg = SolverConfig { seed, max_outer_iters: 200, ..SolverConfig::with_scheme(scheme) };
            let fit = fit_fixed_m(x.view(), y.view(), 2, &pen, &cfg).unwrap();
            let f = objective(x.view(), y.view(), fit.a.view(), fit.b.view(), &pen).unwrap();
            prop_assert!(f <= fit.trace.f0 * (1.0 + 1e-12));
            prop_assert!((f - fit.trace.final_f()).abs() <= 1e-9 * f.max(1.0));
        }
    }
}
