use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};

use ergodic::simulate::{compare_policies, estimate_beta, simulate_policy, PolicySpec, SimConfig};
use ergodic_core::value::resolvent;
use ergodic_core::{build_pair, solve, CostModel, DiffusionModel, ProblemSpec, Tolerances};

fn ou(lambda: f64) -> ProblemSpec {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0).unwrap();
    ProblemSpec::new(m, CostModel::absolute(0.1), lambda, Tolerances::default()).unwrap()
}

fn cfg(time_step: f64, horizon: f64, replicates: usize, seed: u64) -> SimConfig {
    SimConfig { time_step, horizon, burn_in: None, replicates, seed, initial_state: None }
}

#[test]
fn standard_error_scales_like_inverse_root_horizon() {
    let spec = ou(10.0);
    let p = PolicySpec { threshold: 0.353 };
    let short = simulate_policy(&spec, p, &cfg(1e-2, 500.0, 64, 3)).unwrap();
    let long = simulate_policy(&spec, p, &cfg(1e-2, 1000.0, 64, 3)).unwrap();
    let ratio = short.std_error / long.std_error;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() <= 0.3, "ratio {ratio}");
}

#[test]
fn cost_decreases_towards_optimum_and_rises_beyond() {
    let spec = ou(10.0);
    let y = solve(&spec).unwrap().y_star;
    let thresholds = [y - 0.3, y - 0.2, y - 0.1, y, 1.5];
    let c = compare_policies(&spec, &thresholds, &cfg(2e-3, 1000.0, 8, 5)).unwrap();
    let means: Vec<f64> = c.reports.iter().map(|r| r.mean).collect();
    assert!(means[0] > means[1] && means[1] > means[2] && means[2] > means[3], "{means:?}");
    assert!(means[4] > means[3], "{means:?}");
    assert_eq!(c.best, 3);
    assert!(c.conclusive, "{:?}", c.versus_best);
}

#[test]
fn common_random_numbers_shrink_paired_error() {
    let spec = ou(10.0);
    let config = cfg(2e-3, 500.0, 16, 9);
    let c = compare_policies(&spec, &[0.25, 0.45], &config).unwrap();
    let d = c.versus_best.iter().find(|d| d.mean != 0.0).unwrap();
    let unpaired = (c.reports[0].std_error.powi(2) + c.reports[1].std_error.powi(2)).sqrt();
    assert!(d.std_error < 0.5 * unpaired, "paired {} unpaired {unpaired}", d.std_error);
}

#[test]
fn logistic_model_simulation_matches_beta() {
    let m = DiffusionModel::verhulst_pearl(1.0, 1.0, 0.01).unwrap();
    let spec = ProblemSpec::new(m, CostModel::power(2.0, -1.0), 10.0, Tolerances::default()).unwrap();
    let r = solve(&spec).unwrap();
    let report = estimate_beta(&spec, &r, &cfg(1e-3, 500.0, 8, 21)).unwrap();
    assert_eq!(report.invalid_replicates, 0);
    assert!(report.z_score.unwrap().abs() <= 4.0, "{report:?}");
}

/// `R_λ f(x) = E[f(X_τ)]/λ` with `τ ~ Exp(λ)` independent of `X`; the OU
/// transition law is Gaussian, so `X_τ` is sampled exactly.
#[test]
fn resolvent_matches_monte_carlo() {
    let lambda = 1.0;
    let spec = ou(lambda);
    let pair = build_pair(&spec).unwrap();
    let f = |z: f64| spec.pi_gamma(z);
    let x = 1.0;
    let exact = resolvent(&spec, &pair, f, x).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let clock = Exp::new(lambda).unwrap();
    let n = 400_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let t: f64 = rng.sample(clock);
        let e = (-t).exp();
        let z: f64 = rng.sample(StandardNormal);
        let v = f(x * e + ((1.0 - e * e) / 2.0).sqrt() * z) / lambda;
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "MC {mean} ± {se}, resolvent {exact}");
}

#[test]
fn reports_are_bit_identical_for_a_fixed_seed() {
    let spec = ou(10.0);
    let r = solve(&spec).unwrap();
    let a = estimate_beta(&spec, &r, &cfg(2e-3, 100.0, 4, 77)).unwrap();
    let b = estimate_beta(&spec, &r, &cfg(2e-3, 100.0, 4, 77)).unwrap();
    assert_eq!(ergodic::output::to_json(&a).unwrap(), ergodic::output::to_json(&b).unwrap());
}
