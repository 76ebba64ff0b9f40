//! Published thresholds, the shape of λ-sweeps, and the sign structure of
//! the auxiliary functions.

mod common;

use common::*;
use ergodic_core::threshold::{find_x_hat, h_function, l_scaled, lambda_sweep, residual_p, sweep_shape};
use ergodic_core::{
    build_pair, build_value_function, solve, CostModel, DiffusionModel, Error, ProblemSpec, Tolerances,
};

fn assert_table(make: fn(f64) -> ProblemSpec, lambdas: &[f64], expected: &[f64], singular: f64) {
    let base = make(lambdas[0]);
    let entries = lambda_sweep(&base, lambdas).unwrap();
    for (e, want) in entries.iter().zip(expected) {
        let r = e.outcome.as_ref().unwrap();
        assert!((r.y_star - want).abs() <= 0.005, "λ = {}: {} vs {want}", e.lambda, r.y_star);
        assert!((r.singular_threshold - singular).abs() <= 0.005);
        assert!(r.bracket_ok && r.diagnostics.beta_consistent);
        assert!(r.residual_p.abs() <= 1e-8, "λ = {}: residual {:e}", e.lambda, r.residual_p);
        assert!(r.x_tilde < r.x_star && r.x_star < r.x_hat);
    }
    let shape = sweep_shape(&entries);
    assert!(shape.strictly_increasing && shape.below_singular);
}

#[test]
fn verhulst_table() {
    assert_table(verhulst, &VP_LAMBDAS, &VP_TABLE, VP_SINGULAR);
    let r = solve(&verhulst(1000.0)).unwrap();
    assert!(r.gap() <= 0.02 && r.gap() > 0.0);
}

#[test]
fn ou_table() {
    assert_table(ou, &OU_LAMBDAS, &OU_TABLE, OU_SINGULAR);
}

#[test]
fn singular_thresholds() {
    assert!((find_x_hat(&verhulst(1.0)).unwrap() - VP_SINGULAR).abs() <= 0.005);
    assert!((find_x_hat(&ou(1.0)).unwrap() - OU_SINGULAR).abs() <= 0.005);
}

#[test]
fn slow_ou_regression() {
    // dX = −0.1X dt + dW with γ = 1; agrees with an independent
    // double-precision prototype to about 1e−4.
    let expected = [1.117088, 1.402515, 1.481976, 1.623137, 1.652164];
    let entries = lambda_sweep(&ou_slow(1.0), &OU_LAMBDAS).unwrap();
    for (e, want) in entries.iter().zip(expected) {
        let r = e.outcome.as_ref().unwrap();
        assert!((r.y_star - want).abs() < 2e-6, "λ = {}: {}", e.lambda, r.y_star);
        assert!((r.singular_threshold - 1.692561).abs() < 2e-6);
    }
}

fn sign_suite(spec: &ProblemSpec) {
    let pair = build_pair(spec).unwrap();
    let r = ergodic_core::solve_threshold(spec, &pair).unwrap();
    let (lo, hi) = match spec.model.lower() {
        ergodic_core::LowerBoundary::Zero => (0.02 * r.x_tilde, 3.0 * r.x_hat),
        ergodic_core::LowerBoundary::NegInfinity => (r.x_tilde - 2.0, r.x_hat + 2.0),
    };
    let xs = grid(lo, hi, 50);
    let l: Vec<f64> = xs.iter().map(|&x| l_scaled(spec, &pair, x).unwrap()).collect();
    let h: Vec<f64> = xs.iter().map(|&x| h_function(spec, x).unwrap()).collect();
    for (i, &x) in xs.iter().enumerate() {
        assert_eq!(l[i] > 0.0, x > r.x_tilde, "L at {x}");
        assert_eq!(h[i] < 0.0, x > r.x_hat, "H at {x}");
        if x < r.x_tilde || x > r.x_hat {
            continue;
        }
        let p = residual_p(spec, &pair, x).unwrap();
        if (x - r.y_star).abs() > 1e-6 {
            assert_eq!(p > 0.0, x > r.y_star, "P at {x}");
        }
    }
    let changes = |v: &[f64]| v.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    assert_eq!(changes(&l), 1);
    assert_eq!(changes(&h), 1);
}

#[test]
fn lemma_sign_structure() {
    for lambda in [5.0, 100.0] {
        sign_suite(&verhulst(lambda));
    }
    for lambda in [1.0, 10.0, 300.0] {
        sign_suite(&ou(lambda));
    }
}

#[test]
fn h_is_positive_below_the_minimizer() {
    let s = verhulst(10.0);
    for x in grid(0.01, s.x_star(), 20) {
        assert!(h_function(&s, x).unwrap() > 0.0);
    }
}

#[test]
fn smooth_fit_at_three_intensities() {
    for spec in [verhulst(5.0), verhulst(50.0), verhulst(1000.0), ou(1.0), ou(10.0), ou(300.0)] {
        let pair = build_pair(&spec).unwrap();
        let r = ergodic_core::solve_threshold(&spec, &pair).unwrap();
        let vf = build_value_function(&spec, &pair, &r).unwrap();
        let (below, above) = vf.second_derivatives_at_threshold().unwrap();
        let target = vf.smooth_fit_target().unwrap();
        assert!(
            rel(below, target) < 1e-4 && rel(above, target) < 1e-4 && rel(below, above) < 1e-4,
            "λ = {}: {below} {above} {target}",
            spec.lambda()
        );
        assert!((vf.derivative_below(r.y_star).unwrap() - spec.gamma()).abs() < 1e-8);
        assert!((vf.derivative_above(r.y_star).unwrap() - spec.gamma()).abs() < 1e-8);
    }
}

#[test]
fn variational_inequality_holds_on_both_models() {
    for (spec, xs) in [(verhulst(50.0), grid(0.05, 3.0, 40)), (ou(10.0), grid(-1.5, 1.5, 41))] {
        let pair = build_pair(&spec).unwrap();
        let r = ergodic_core::solve_threshold(&spec, &pair).unwrap();
        let vf = build_value_function(&spec, &pair, &r).unwrap();
        let report = ergodic_core::variational_check(&vf, &xs, 1e-4);
        assert!(report.all_passed(), "{report:#?}");
    }
}

#[test]
fn continuation_equation_holds_far_below_the_cache_window() {
    // Points well below the cached window, where the direct quadrature
    // would otherwise have to cross the kink of |x| at 0.
    let spec = ou(10.0);
    let pair = build_pair(&spec).unwrap();
    let r = ergodic_core::solve_threshold(&spec, &pair).unwrap();
    let vf = build_value_function(&spec, &pair, &r).unwrap();
    // 1e-5 leaves room for the O(h) central-difference error at x = 0 itself.
    let report = ergodic_core::variational_check(&vf, &grid(-3.0, 1.5, 91), 1e-5);
    assert!(report.checks[1].passed, "{:#?}", report.checks[1]);
}

#[test]
fn cost_without_a_minimizer_is_rejected() {
    // π_μ = |x| − γbx with γb > 1 decreases without bound.
    let m = DiffusionModel::ornstein_uhlenbeck(2.26).unwrap();
    let r = ProblemSpec::new(m, CostModel::power(1.0, 0.48), 0.5, Tolerances::default());
    assert!(matches!(r, Err(Error::AssumptionViolation(_))), "{r:?}");
}
