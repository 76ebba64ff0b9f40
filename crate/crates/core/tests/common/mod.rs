#![allow(dead_code)]

use ergodic_core::{CostModel, DiffusionModel, ProblemSpec, Tolerances};

pub const VP_LAMBDAS: [f64; 5] = [5.0, 10.0, 50.0, 100.0, 1000.0];
pub const VP_TABLE: [f64; 5] = [0.317, 0.496, 0.656, 0.684, 0.726];
pub const VP_SINGULAR: f64 = 0.743;

pub const OU_LAMBDAS: [f64; 5] = [1.0, 5.0, 10.0, 100.0, 300.0];
pub const OU_TABLE: [f64; 5] = [0.182, 0.301, 0.353, 0.469, 0.496];
pub const OU_SINGULAR: f64 = 0.535;

/// Logistic growth, quadratic cost, unit harvesting revenue.
pub fn verhulst(lambda: f64) -> ProblemSpec {
    let m = DiffusionModel::verhulst_pearl(1.0, 1.0, 0.01).unwrap();
    ProblemSpec::new(m, CostModel::power(2.0, -1.0), lambda, Tolerances::default()).unwrap()
}

/// dX = −X dt + dW, π = |x|, γ = 0.1.
pub fn ou(lambda: f64) -> ProblemSpec {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0).unwrap();
    ProblemSpec::new(m, CostModel::absolute(0.1), lambda, Tolerances::default()).unwrap()
}

/// dX = −0.1X dt + dW, π = |x|, γ = 1.
pub fn ou_slow(lambda: f64) -> ProblemSpec {
    let m = DiffusionModel::ornstein_uhlenbeck(0.1).unwrap();
    ProblemSpec::new(m, CostModel::absolute(1.0), lambda, Tolerances::default()).unwrap()
}

pub fn without_closed_form(spec: &ProblemSpec) -> ProblemSpec {
    ProblemSpec::new(spec.model.without_closed_form(), spec.cost.clone(), spec.lambda(), spec.tolerances).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
