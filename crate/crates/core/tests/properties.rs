use proptest::prelude::*;

use dsslab::exponents::{rat, Exponent};
use dsslab::field::{Field, GridSpec};
use dsslab::operator::{assemble, cg_solve, CoefficientField};

fn field(d: usize, cells: usize) -> impl Strategy<Value = Field> {
    let g = GridSpec::new(d, cells).unwrap();
    prop::collection::vec(0.0f64..10.0, g.len()).prop_map(move |v| Field::new(g, v).unwrap())
}

fn small_field() -> impl Strategy<Value = Field> {
    (1usize..=3).prop_flat_map(|d| {
        let cells = [0, 12, 5, 3][d];
        field(d, cells)
    })
}

fn system_input() -> impl Strategy<Value = (CoefficientField, Field, Field, Field)> {
    (1usize..=3).prop_flat_map(|d| {
        let cells = [0, 10, 5, 3][d];
        let g = GridSpec::new(d, cells).unwrap();
        let samples = prop::collection::vec(0.5f64..3.0, g.len())
            .prop_map(move |a| Field::new(g, a).unwrap());
        (samples, field(d, cells), field(d, cells), field(d, cells)).prop_map(
            |(a, reaction, x, y)| {
                (
                    CoefficientField::from_node_samples(&a).unwrap(),
                    reaction,
                    x,
                    y,
                )
            },
        )
    })
}

proptest! {
    #[test]
    fn truncation_splits_exactly_up_to_rounding(f in small_field(), k in 0.0f64..8.0) {
        let t = f.truncate_tk(k).unwrap();
        let g = f.excess_gk(k).unwrap();
        for ((a, b), s) in t.values().iter().zip(g.values()).zip(f.values()) {
            prop_assert!((a + b - s).abs() <= f64::EPSILON * s.abs());
            prop_assert!(*a <= k && *b >= 0.0);
        }
    }

    #[test]
    fn lp_norm_is_monotone_in_p(f in small_field(), a in 2i128..20, b in 1i128..20) {
        let p = rat(a, 2);
        let q = p + rat(b, 4);
        let lp = f.lp_norm(Exponent::Finite(p)).unwrap();
        let lq = f.lp_norm(Exponent::Finite(q)).unwrap();
        let linf = f.lp_norm(Exponent::Infinite).unwrap();
        prop_assert!(lp <= lq * (1.0 + 1e-12) + 1e-300);
        prop_assert!(lq <= linf * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn holder_inequality(f in small_field(), g in small_field()) {
        prop_assume!(f.grid() == g.grid());
        let fg = f.zip_map(&g, |a, b| a * b).unwrap().integral();
        let bound = f.lp_norm_f64(3.0).unwrap() * g.lp_norm_f64(1.5).unwrap();
        prop_assert!(fg <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn operator_is_symmetric_and_coercive((coeff, reaction, x, y) in system_input()) {
        let sys = assemble(&coeff, &reaction).unwrap();
        let ax = sys.apply(&x).unwrap();
        let ay = sys.apply(&y).unwrap();
        let lhs = ax.dot(&y);
        let rhs = x.dot(&ay);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        prop_assert!(ax.dot(&x) >= 0.0);
        let energy = coeff.bilinear(&x, &x);
        prop_assert!(energy >= coeff.alpha() * x.h1_seminorm().powi(2) * (1.0 - 1e-12));
    }

    #[test]
    fn discrete_maximum_principle((coeff, reaction, rhs, _y) in system_input()) {
        let sys = assemble(&coeff, &reaction).unwrap();
        let sol = cg_solve(&sys, &rhs, 1e-12, 10_000).unwrap();
        let scale = sol.solution.sup_norm().max(1e-300);
        prop_assert!(sol.solution.min_value() >= -1e-9 * scale);
    }

    #[test]
    fn cg_recovers_a_known_solution((coeff, reaction, x, _y) in system_input()) {
        let sys = assemble(&coeff, &reaction).unwrap();
        let rhs = sys.apply(&x).unwrap();
        prop_assume!(rhs.sup_norm() > 0.0);
        let sol = cg_solve(&sys, &rhs, 1e-12, 10_000).unwrap();
        let err = sol.solution.zip_map(&x, |a, b| a - b).unwrap().sup_norm();
        prop_assert!(err <= 1e-7 * x.sup_norm().max(1.0), "err {err}");
    }
}
