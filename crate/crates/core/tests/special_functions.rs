mod common;

use noma_tradeoff::special::{expint_e1, f_kernel};
use proptest::prelude::*;

#[test]
fn rejects_nonpositive_and_nan() {
    for x in [0.0, -1.0, f64::NAN, f64::NEG_INFINITY] {
        assert!(expint_e1(x).is_err(), "{x}");
        assert!(f_kernel(x).is_err(), "{x}");
    }
}

#[test]
fn known_values() {
    // E1(1) and E1(0.1) to 16 digits
    for (x, want) in [(1.0, 0.219_383_934_395_520_27), (0.1, 1.822_923_958_419_390_7)] {
        let got = expint_e1(x).unwrap();
        assert!((got / want - 1.0).abs() < 4e-15, "E1({x}) = {got}");
    }
}

#[test]
fn huge_argument_underflows_cleanly() {
    assert_eq!(expint_e1(1e4).unwrap(), 0.0);
    let f = f_kernel(1e8).unwrap();
    assert!((f + 1e-8).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernel_is_scaled_e1(lx in -4.0f64..2.8) {
        let x = 10f64.powf(lx);
        let lhs = f_kernel(x).unwrap();
        let rhs = -x.exp() * expint_e1(x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs());
    }

    #[test]
    fn kernel_bracket(lx in -6.0f64..6.0) {
        let x = 10f64.powf(lx);
        let f = f_kernel(x).unwrap();
        prop_assert!(f < 0.0);
        prop_assert!(-f < (1.0 / x).ln_1p());
        prop_assert!(-f > 0.5 * (2.0 / x).ln_1p());
    }

    #[test]
    fn e1_decreasing(lx in -4.0f64..2.5, step in 1e-6f64..1.0) {
        let x = 10f64.powf(lx);
        prop_assert!(expint_e1(x).unwrap() > expint_e1(x * (1.0 + step)).unwrap());
    }

    #[test]
    fn e1_derivative(lx in -2.0f64..1.5) {
        // d/dx E1 = -e^{-x} / x
        let x = 10f64.powf(lx);
        let h = 1e-4 * x;
        let fd = (expint_e1(x - 2.0 * h).unwrap() - 8.0 * expint_e1(x - h).unwrap()
            + 8.0 * expint_e1(x + h).unwrap() - expint_e1(x + 2.0 * h).unwrap()) / (12.0 * h);
        let exact = -(-x).exp() / x;
        prop_assert!((fd - exact).abs() <= 1e-7 * exact.abs());
    }

    #[test]
    fn matches_quadrature(lx in -3.0f64..3.0) {
        let x = 10f64.powf(lx);
        let q = common::scaled_e1_quadrature(x);
        prop_assert!((f_kernel(x).unwrap() + q).abs() <= 1e-11 * q);
    }
}
