//! Scale/speed measures and the auxiliary functions against closed-form
//! and brute-force references.

mod common;

use common::*;
use ergodic_core::measure::{lower_integral, m_measure};
use ergodic_core::threshold::{find_x_hat, h_function, l_scaled};
use ergodic_core::{build_pair, CostModel, DiffusionModel, Error, LowerBoundary, ProblemSpec, Tolerances};
use statrs::function::gamma::gamma_li;

fn vp_spec(mu: f64, sigma: f64, b: f64) -> ProblemSpec {
    let m = DiffusionModel::verhulst_pearl(mu, sigma, b).unwrap();
    ProblemSpec::new(m, CostModel::power(2.0, -1.0), 10.0, Tolerances::default()).unwrap()
}

#[test]
fn verhulst_speed_measure_is_an_incomplete_gamma() {
    // m′ = (2/σ²) x^{p−2} e^{−c(x−1)}, p = 2μ/σ², c = pb (anchor 1), so
    // m(0, x) = (2/σ²) e^c c^{1−p} γ(p − 1, cx).
    for (mu, sigma, b) in [(1.0, 1.0, 0.01), (1.3, 0.9, 0.05), (0.8, 1.1, 0.02), (2.0, 0.7, 0.1)] {
        let spec = vp_spec(mu, sigma, b);
        let p = 2.0 * mu / (sigma * sigma);
        let c = p * b;
        for x in [0.01, 0.3, 1.0, 4.0, 25.0] {
            let exact = 2.0 / (sigma * sigma) * c.exp() * c.powf(1.0 - p) * gamma_li(p - 1.0, c * x);
            let got = m_measure(&spec, x).unwrap();
            assert!(rel(got, exact) < 1e-9, "μ={mu} σ={sigma} b={b} x={x}: {got} vs {exact}");
        }
    }
}

#[test]
fn ou_speed_measure_of_the_negative_half_line() {
    for b in [0.1, 1.0, 3.0] {
        let m = DiffusionModel::ornstein_uhlenbeck(b).unwrap();
        let spec = ProblemSpec::new(m, CostModel::absolute(0.1), 1.0, Tolerances::default()).unwrap();
        let exact = (std::f64::consts::PI / b).sqrt();
        assert!(rel(m_measure(&spec, 0.0).unwrap(), exact) < 1e-10);
    }
}

#[test]
fn drift_against_speed_measure_is_a_scale_increment() {
    // ∫_a^b μ m′ = 1/S′(b) − 1/S′(a).
    let models = [
        DiffusionModel::verhulst_pearl(1.0, 1.0, 0.01).unwrap(),
        DiffusionModel::verhulst_pearl(1.0, 1.0, 0.01).unwrap().without_closed_form(),
        DiffusionModel::ornstein_uhlenbeck(1.0).unwrap(),
        DiffusionModel::ornstein_uhlenbeck(0.1).unwrap().without_closed_form(),
    ];
    for m in models {
        let (a, b) = if m.lower() == LowerBoundary::Zero { (0.2, 7.0) } else { (-1.5, 2.0) };
        let f = |z: f64| m.drift(z) * m.speed_density(z).unwrap();
        let lhs =
            ergodic_core::quadrature::integrate(ergodic_core::quadrature::Integrand::new(f), a, b, 1e-13).unwrap();
        let rhs = 1.0 / m.scale_density(b).unwrap() - 1.0 / m.scale_density(a).unwrap();
        assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn closed_form_densities_match_numeric_ones() {
    for m in [DiffusionModel::verhulst_pearl(1.0, 1.0, 0.01).unwrap(), DiffusionModel::ornstein_uhlenbeck(0.1).unwrap()]
    {
        let n = m.without_closed_form();
        let xs = if m.lower() == LowerBoundary::Zero { grid(1e-4, 50.0, 40) } else { grid(-6.0, 6.0, 40) };
        for x in xs {
            assert!(rel(n.scale_density(x).unwrap(), m.scale_density(x).unwrap()) < 1e-8, "{x}");
            assert!(rel(n.speed_density(x).unwrap(), m.speed_density(x).unwrap()) < 1e-8, "{x}");
        }
    }
}

#[test]
fn documented_density_values() {
    let bm = DiffusionModel::new(|_| 0.0, |_| 1.0, LowerBoundary::NegInfinity);
    assert_eq!(bm.scale_density(3.7).unwrap(), 1.0);
    assert_eq!(bm.speed_density(-2.0).unwrap(), 2.0);
    let ou = DiffusionModel::ornstein_uhlenbeck(0.1).unwrap();
    assert!((ou.scale_density(2.0).unwrap() - 0.4f64.exp()).abs() < 1e-15);
    assert_eq!(ou.speed_density(0.0).unwrap(), 2.0);
    // S′ ∝ x^{−2} e^{0.02x}.
    let vp = DiffusionModel::verhulst_pearl(1.0, 1.0, 0.01).unwrap();
    let r = |x: f64| vp.scale_density(x).unwrap() * x * x * (-0.02 * x).exp();
    assert!(rel(r(0.3), r(17.0)) < 1e-13);
}

#[test]
fn brownian_motion_is_rejected() {
    let bm = DiffusionModel::new(|_| 0.0, |_| 1.0, LowerBoundary::NegInfinity);
    let spec =
        ProblemSpec::new(bm, CostModel::new(|x| x * x, 0.5).with_minimizer(0.0), 1.0, Tolerances::default()).unwrap();
    match m_measure(&spec, 0.0) {
        Err(Error::AssumptionViolation(_)) => {}
        other => panic!("expected a divergence error, got {other:?}"),
    }
    assert!(ergodic_core::solve(&spec).is_err());
}

#[test]
fn verhulst_h_against_gamma_moments() {
    // π_μ = (1 + b)z² − z and m′ = 2e^{c} e^{−cz} with c = 2b; the moments
    // ∫_0^x z^k e^{−cz} dz = γ(k + 1, cx)/c^{k+1}.
    let spec = verhulst(10.0);
    let b = 0.01;
    let c = 2.0 * b;
    let moment = |k: f64, x: f64| gamma_li(k + 1.0, c * x) / c.powf(k + 1.0);
    let pm = |z: f64| (1.0 + b) * z * z - z;
    let h = |x: f64| 2.0 * c.exp() * ((1.0 + b) * moment(2.0, x) - moment(1.0, x) - pm(x) * moment(0.0, x));
    for x in [0.05, 0.4, 0.743, 1.5, 6.0] {
        let got = h_function(&spec, x).unwrap();
        assert!((got - h(x)).abs() < 1e-10 * h(x).abs().max(1e-3), "x={x}: {got} vs {}", h(x));
    }
    let x_hat = find_x_hat(&spec).unwrap();
    assert!(h(x_hat).abs() < 1e-11);
    assert!((x_hat - VP_SINGULAR).abs() < 5e-4);
}

#[test]
fn lower_integral_is_additive() {
    let spec = ou(3.0);
    let f = |z: f64| spec.pi_mu(z);
    let whole = lower_integral(&spec, 1.2, f).unwrap();
    let part = lower_integral(&spec, -0.4, f).unwrap();
    let m = &spec.model;
    let middle = ergodic_core::quadrature::integrate(
        ergodic_core::quadrature::Integrand::new(|z| f(z) * m.speed_density(z).unwrap()),
        -0.4,
        1.2,
        1e-13,
    )
    .unwrap();
    assert!((whole - part - middle).abs() < 1e-11);
}

#[test]
fn l_against_midpoint_rule() {
    // Brute force: midpoint rule on a long, fine grid with the same φ.
    for (spec, xs) in [(ou(10.0), vec![-0.5f64, -0.126, 0.1, 1.0]), (verhulst(50.0), vec![0.2, 0.437, 0.9])] {
        let pair = build_pair(&spec).unwrap();
        for x in xs {
            let len = 12.0 * (1.0 + x.abs());
            let lp = pair.ln_phi(x).unwrap();
            let p = spec.pi_mu(x);
            let midpoint = |n: usize| {
                let h = len / n as f64;
                let mut sum = 0.0;
                for i in 0..n {
                    let z = x + (i as f64 + 0.5) * h;
                    let w = (pair.ln_phi(z).unwrap() - lp + spec.model.ln_speed_density(z).unwrap()).exp();
                    sum += (spec.pi_mu(z) - p) * w;
                }
                spec.lambda() * sum * h
            };
            // One Richardson step removes the O(h²) term.
            let (coarse, fine) = (midpoint(40_000), midpoint(80_000));
            let brute = fine + (fine - coarse) / 3.0;
            let got = l_scaled(&spec, &pair, x).unwrap();
            assert!((got - brute).abs() < 1e-7 * brute.abs().max(1.0), "x={x}: {got} vs {brute}");
        }
    }
}

#[test]
fn lower_integral_survives_underflowing_density() {
    // With b = 2.5 the density 2e^{−bx²} is exactly zero in f64 beyond x ≈ 17,
    // yet m(−∞, x) must stay at its full mass 2√(π/b).
    let m = DiffusionModel::ornstein_uhlenbeck(2.5).unwrap();
    let spec = ProblemSpec::new(m, CostModel::absolute(0.1), 1.0, Tolerances::default()).unwrap();
    let full = 2.0 * (std::f64::consts::PI / 2.5).sqrt();
    for x in [5.0, 30.0, 1e3] {
        let v = m_measure(&spec, x).unwrap();
        assert!((v - full).abs() < 1e-10 * full, "m(−∞, {x}) = {v}");
    }
}
