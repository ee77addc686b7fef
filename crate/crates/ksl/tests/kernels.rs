//! Kernel evaluation against values frozen from a 40-digit arbitrary
//! precision reference, plus the sign, exactness, and derivative-chain
//! properties the rest of the library leans on.

// Frozen reference values keep their full reference digits; they round
// to the nearest f64 on parse.
#![allow(clippy::excessive_precision)]

use ksl::kernels::{
    eval_big_l, eval_f, eval_g, eval_h, eval_l, eval_l_derivative, kernel_identity_report,
    MAX_ORDER,
};
use proptest::prelude::*;

fn assert_rel(actual: f64, expected: f64, tol: f64) {
    let err = (actual - expected).abs() / expected.abs().max(1e-300);
    assert!(
        err <= tol,
        "got {actual:e}, expected {expected:e} (rel err {err:e})"
    );
}

/// `exp(-2x) L(x)` regardless of which form `eval_big_l` chose to return.
fn big_l_damped(n: usize, x: f64) -> f64 {
    let v = eval_big_l(n, x).unwrap();
    if v.scaled {
        v.value
    } else {
        v.value * (-2.0 * x).exp()
    }
}

#[test]
fn f_matches_reference_values() {
    assert_rel(eval_f(1, 1.0).unwrap(), 0.632120558828557678404, 1e-15);
    assert_rel(eval_f(0, 2.0).unwrap(), 0.135335283236612691894, 1e-15);
    assert_rel(eval_f(2, 2.0).unwrap(), 1.13533528323661269189, 1e-15);
    assert_rel(eval_f(3, 2.0).unwrap(), 0.864664716763387308106, 1e-15);
    assert_rel(eval_f(4, 0.5).unwrap(), 0.00236399304596675693713, 1e-15);
    assert_rel(eval_f(6, 30.0).unwrap(), 172829.000000000000094, 1e-15);
}

#[test]
fn g_matches_reference_values() {
    assert_rel(eval_g(1, 1.0).unwrap(), -0.367879441171442321596, 1e-15);
    assert_rel(eval_g(3, 2.0).unwrap(), -1.08268226589290153515, 1e-15);
    assert_rel(eval_g(5, 12.0).unwrap(), -4224.00235937754367803, 1e-14);
    // Far past the series switch the two halves of the defining expression
    // agree to fifteen digits, which is exactly why a separate route exists.
    assert_rel(eval_g(2, 50.0).unwrap(), -1.0, 1e-15);
    assert_rel(eval_g(3, 50.0).unwrap(), -96.0, 1e-15);
}

#[test]
fn h_matches_reference_values() {
    assert_rel(eval_h(1, 1.0).unwrap(), -0.367879441171442321596, 1e-15);
    assert_rel(eval_h(3, 1.5).unwrap(), -1.0776286926907503738, 1e-14);
    assert_rel(eval_h(4, 20.0).unwrap(), -7007.9999736831905487, 1e-14);
    assert_rel(eval_h(2, 50.0).unwrap(), -4.0, 1e-15);
    assert_rel(eval_h(3, 50.0).unwrap(), -564.0, 1e-15);
}

#[test]
fn l_matches_reference_values() {
    assert_rel(eval_l(3, 2.0).unwrap(), 0.872070196518056908184, 1e-14);
    assert_rel(eval_l(2, 3.0).unwrap(), 1.15361983774631296935, 1e-14);
    assert_rel(eval_l(4, 9.0).unwrap(), 233.891152552795548637, 1e-14);
    assert_rel(eval_l(5, 40.0).unwrap(), 407840.000000000000198, 1e-15);
}

#[test]
fn big_l_matches_reference_values() {
    assert_rel(big_l_damped(2, 1.0), 0.0316969597222857271074, 1e-13);
    assert_rel(big_l_damped(3, 8.0), 68.4052393046469331783, 1e-13);
    assert_rel(big_l_damped(4, 50.0), 15926436.0, 1e-13);
    // For n = 1 the polynomial part vanishes identically and the damped
    // value is far below the rounding scale of the defining quadratic.
    assert_rel(big_l_damped(1, 37.4), 2.08203372734195559704e-15, 1e-13);
}

#[test]
fn big_l_reports_scaling_when_undamping_would_overflow() {
    let v = eval_big_l(2, 400.0).unwrap();
    assert!(v.scaled);
    assert_rel(v.value, 1.0, 1e-12);
    let v = eval_big_l(2, 1.0).unwrap();
    assert!(!v.scaled);
}

#[test]
fn kernels_vanish_exactly_at_zero() {
    assert_eq!(eval_f(0, 0.0).unwrap(), 1.0);
    for k in 1..=MAX_ORDER {
        assert_eq!(eval_f(k, 0.0).unwrap(), 0.0);
        assert_eq!(eval_g(k, 0.0).unwrap(), 0.0);
        assert_eq!(eval_h(k, 0.0).unwrap(), 0.0);
    }
    for n in 1..=MAX_ORDER - 1 {
        assert_eq!(eval_l(n, 0.0).unwrap(), 0.0);
        for j in 0..n {
            assert_eq!(eval_l_derivative(n, j, 0.0).unwrap(), 0.0);
        }
    }
}

#[test]
fn kernel_signs_hold_on_a_wide_grid() {
    for i in 1..=200 {
        let x = 50.0 * i as f64 / 200.0;
        for k in 0..=MAX_ORDER {
            assert!(eval_f(k, x).unwrap() > 0.0, "f_{k}({x}) <= 0");
        }
        for k in 1..=MAX_ORDER {
            assert!(eval_g(k, x).unwrap() <= 0.0, "g_{k}({x}) > 0");
            assert!(eval_h(k, x).unwrap() <= 0.0, "h_{k}({x}) > 0");
        }
        for n in 1..=5 {
            assert!(eval_l(n, x).unwrap() > 0.0, "l_{n}({x}) <= 0");
            let big = eval_big_l(n, x).unwrap();
            assert!(big.value > 0.0, "L_{n}({x}) <= 0");
        }
    }
}

#[test]
fn top_l_derivative_is_the_damped_square() {
    for n in 1..=6 {
        let fact: f64 = (1..n).map(|i| i as f64).product();
        for i in 0..60 {
            let x = 0.5 * i as f64;
            let direct = fact * x * x * (-x).exp();
            if x == 0.0 {
                assert_eq!(eval_l_derivative(n, n - 1, x).unwrap(), 0.0);
            } else {
                assert_rel(eval_l_derivative(n, n - 1, x).unwrap(), direct, 1e-15);
            }
        }
    }
}

#[test]
fn identity_report_is_tight_on_the_documented_example() {
    let grid: Vec<f64> = (0..100).map(|i| 10.0 * i as f64 / 99.0).collect();
    let report = kernel_identity_report(2, &grid, 1e-4).unwrap();
    assert!(
        report.max_residual() < 1e-6,
        "n = 2 residual {:e}",
        report.max_residual()
    );
}

#[test]
fn identity_report_covers_the_full_order_range() {
    let grid: Vec<f64> = (0..200).map(|i| 50.0 * i as f64 / 199.0).collect();
    for n in 1..=5 {
        let report = kernel_identity_report(n, &grid, 1e-3).unwrap();
        assert!(
            report.max_residual() < 1e-5,
            "n = {n} residual {:e}",
            report.max_residual()
        );
    }
}

#[test]
fn identity_report_at_the_origin_only() {
    let report = kernel_identity_report(1, &[0.0], 1e-3).unwrap();
    assert!(report.f_chain < 1e-9, "f chain at 0: {:e}", report.f_chain);
    assert_eq!(report.l_chain, 0.0);
}

#[test]
fn rejects_out_of_range_orders_and_arguments() {
    assert!(eval_f(MAX_ORDER + 1, 1.0).is_err());
    assert!(eval_f(1, -0.25).is_err());
    assert!(eval_f(1, f64::NAN).is_err());
    assert!(eval_g(0, 1.0).is_err());
    assert!(eval_h(0, 1.0).is_err());
    assert!(eval_l(0, 1.0).is_err());
    assert!(eval_l_derivative(2, 3, 1.0).is_err());
    assert!(kernel_identity_report(0, &[0.0], 1e-3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_steps_down_one_order(k in 0usize..MAX_ORDER, x in 0.0f64..40.0) {
        let lhs = eval_f(k, x).unwrap();
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let rhs = x.powi(k as i32) / fact - eval_f(k + 1, x).unwrap();
        let err = (lhs - rhs).abs() / lhs.abs().max(1.0);
        prop_assert!(err < 1e-12, "k = {k}, x = {x}: {lhs:e} vs {rhs:e}");
    }

    #[test]
    fn g_and_h_stay_nonpositive(k in 1usize..=MAX_ORDER, x in 0.0f64..200.0) {
        prop_assert!(eval_g(k, x).unwrap() <= 0.0);
        prop_assert!(eval_h(k, x).unwrap() <= 0.0);
    }
}
