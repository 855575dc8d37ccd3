use ghopf::{ComplexExpr, C64};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = ComplexExpr> {
    prop_oneof![
        Just(ComplexExpr::w()),
        Just(ComplexExpr::wbar()),
        Just(ComplexExpr::x()),
        Just(ComplexExpr::y()),
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| ComplexExpr::constant(C64::new(a, b))),
    ]
}

/// Smooth expressions that stay finite on the unit disk.
fn expr() -> impl Strategy<Value = ComplexExpr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            inner.clone().prop_map(|a| a.neg()),
            inner.clone().prop_map(|a| a.conj()),
            inner.clone().prop_map(|a| a.powi(2)),
            inner.clone().prop_map(|a| a.mul(&ComplexExpr::real(0.3)).exp()),
            inner
                .clone()
                .prop_map(|a| a.div(&ComplexExpr::real(2.0).add(&a.abs().powi(2)))),
        ]
    })
}

fn point() -> impl Strategy<Value = C64> {
    (0.0..0.9f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(e in expr(), p in point()) {
        let text = e.to_string();
        let back = ComplexExpr::parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        prop_assert!(close(e.eval(p).unwrap(), back.eval(p).unwrap(), 1e-12), "{}", text);
    }

    #[test]
    fn wirtinger_matches_central_differences(e in expr(), p in point()) {
        let h = 1e-5;
        let f = |z: C64| e.eval(z).unwrap();
        let fx = (f(p + h) - f(p - h)) / (2.0 * h);
        let fy = (f(p + C64::new(0.0, h)) - f(p - C64::new(0.0, h))) / (2.0 * h);
        let i = C64::new(0.0, 1.0);
        let scale = 1.0 + f(p).norm();
        prop_assert!((e.d_w().eval(p).unwrap() - (fx - i * fy) / 2.0).norm() < 1e-5 * scale);
        prop_assert!((e.d_wbar().eval(p).unwrap() - (fx + i * fy) / 2.0).norm() < 1e-5 * scale);
    }

    #[test]
    fn mixed_derivatives_commute(e in expr(), p in point()) {
        let a = e.d_w().d_wbar().eval(p).unwrap();
        let b = e.d_wbar().d_w().eval(p).unwrap();
        prop_assert!(close(a, b, 1e-10));
    }

    #[test]
    fn conjugation_swaps_operators(e in expr(), p in point()) {
        let a = e.conj().d_wbar().eval(p).unwrap();
        let b = e.d_w().eval(p).unwrap().conj();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn real_parts_are_real(e in expr(), p in point()) {
        prop_assert_eq!(e.re().eval(p).unwrap().im, 0.0);
        prop_assert_eq!(e.abs().eval(p).unwrap().im, 0.0);
    }
}
