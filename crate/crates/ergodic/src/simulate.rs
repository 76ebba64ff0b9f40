//! Monte Carlo evaluation of threshold policies: Euler–Maruyama paths, with
//! control possible only at Poisson arrivals (Bernoulli thinning per step).
//!
//! Every step draws exactly one normal and one uniform from a per-replicate
//! ChaCha stream keyed by `(seed, replicate)`, so runs are reproducible in
//! any execution order and different thresholds share the same noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ergodic_core::{LowerBoundary, ProblemSpec, SolveResult};

use crate::Error;

/// Floor for ℝ₊ models when an Euler step overshoots below zero.
pub const CLAMP_EPSILON: f64 = 1e-12;

/// A replicate with more clamps than this fraction of its steps is invalid.
pub const MAX_CLAMP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    /// At an arrival with `X > threshold`, push `X` down to `threshold`.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub time_step: f64,
    pub horizon: f64,
    /// Discarded initial period; `None` means 5% of the horizon.
    #[serde(default)]
    pub burn_in: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// `None` starts each path at the policy threshold.
    #[serde(default)]
    pub initial_state: Option<f64>,
}

impl SimConfig {
    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(0.05 * self.horizon)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("simulation.{field}: {why}")));
        if !(self.time_step.is_finite() && self.time_step > 0.0) {
            return bad("time_step", "must be positive");
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad("horizon", "must be positive");
        }
        let t0 = self.burn_in();
        if !(t0.is_finite() && t0 >= 0.0 && t0 < self.horizon) {
            return bad("burn_in", "must satisfy 0 ≤ burn_in < horizon");
        }
        if self.replicates == 0 {
            return bad("replicates", "must be at least 1");
        }
        if self.initial_state.is_some_and(|x| !x.is_finite()) {
            return bad("initial_state", "must be finite");
        }
        Ok(())
    }

    fn steps(&self) -> (u64, u64) {
        let total = (self.horizon / self.time_step).round() as u64;
        let burn = (self.burn_in() / self.time_step).round() as u64;
        (total, burn)
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    /// Running plus control cost over `[T₀, T]` divided by `T − T₀`.
    pub average_cost: f64,
    pub running_cost: f64,
    pub control_cost: f64,
    /// Sum of impulse sizes over `[T₀, T]`.
    pub total_impulse: f64,
    pub control_events: u64,
    pub arrivals: u64,
    pub clamps: u64,
    pub valid: bool,
}

/// Aggregate over replicates. The estimate is a finite-horizon proxy for the
/// long-run average cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub threshold: f64,
    pub lambda: f64,
    pub estimate_kind: String,
    /// By replicate index; invalid replicates are `null`.
    pub per_replicate_cost: Vec<Option<f64>>,
    #[serde(deserialize_with = "ergodic_core::error::f64_or_nan")]
    pub mean: f64,
    #[serde(deserialize_with = "ergodic_core::error::f64_or_nan")]
    pub std_error: f64,
    #[serde(deserialize_with = "pair_or_nan")]
    pub ci95: [f64; 2],
    pub control_events: u64,
    pub average_impulse: f64,
    pub arrivals: u64,
    pub clamp_warnings: u64,
    pub invalid_replicates: usize,
    pub time_step_warning: bool,
    pub analytic_beta: Option<f64>,
    pub z_score: Option<f64>,
    pub config: SimConfig,
}

fn pair_or_nan<'de, D: serde::Deserializer<'de>>(d: D) -> Result<[f64; 2], D::Error> {
    let [a, b] = <[Option<f64>; 2]>::deserialize(d)?;
    Ok([a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN)])
}

/// Per-step arrival probability `1 − e^{−λΔt}`.
pub fn arrival_probability(lambda: f64, dt: f64) -> f64 {
    -(-lambda * dt).exp_m1()
}

/// The noise stream of replicate `r`.
pub fn replicate_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Simulates one path under the threshold policy.
pub fn simulate_replicate(spec: &ProblemSpec, policy: PolicySpec, config: &SimConfig, r: usize) -> ReplicateOutcome {
    let dt = config.time_step;
    let sqrt_dt = dt.sqrt();
    let p = arrival_probability(spec.lambda(), dt);
    let gamma = spec.gamma();
    let y = policy.threshold;
    let (total, burn) = config.steps();
    let half_line = spec.model.lower() == LowerBoundary::Zero;
    let mut rng = replicate_rng(config.seed, r);

    let mut x = config.initial_state.unwrap_or(y);
    let mut running = 0.0;
    let mut impulse = 0.0;
    let mut events = 0u64;
    let mut arrivals = 0u64;
    let mut clamps = 0u64;
    let mut finite = true;

    for step in 0..total {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let counted = step >= burn;
        if counted {
            running += spec.cost.running_cost(x) * dt;
        }
        x += spec.model.drift(x) * dt + spec.model.volatility(x) * sqrt_dt * z;
        if half_line && x <= 0.0 {
            x = CLAMP_EPSILON;
            clamps += 1;
        }
        if u < p {
            if counted {
                arrivals += 1;
            }
            if x > y {
                if counted {
                    impulse += x - y;
                    events += 1;
                }
                x = y;
            }
        }
        if !x.is_finite() {
            finite = false;
            break;
        }
    }

    let span = (total - burn) as f64 * dt;
    let control = gamma * impulse;
    ReplicateOutcome {
        average_cost: (running + control) / span,
        running_cost: running / span,
        control_cost: control / span,
        total_impulse: impulse,
        control_events: events,
        arrivals,
        clamps,
        valid: finite && (clamps as f64) <= MAX_CLAMP_FRACTION * total as f64,
    }
}

fn aggregate(spec: &ProblemSpec, policy: PolicySpec, config: &SimConfig, outcomes: &[ReplicateOutcome]) -> SimReport {
    let valid: Vec<f64> = outcomes.iter().filter(|o| o.valid).map(|o| o.average_cost).collect();
    let n = valid.len() as f64;
    let mean = valid.iter().sum::<f64>() / n;
    let var =
        if valid.len() > 1 { valid.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { f64::NAN };
    let se = (var / n).sqrt();
    let events: u64 = outcomes.iter().map(|o| o.control_events).sum();
    let impulse: f64 = outcomes.iter().map(|o| o.total_impulse).sum();
    SimReport {
        threshold: policy.threshold,
        lambda: spec.lambda(),
        estimate_kind: "finite-horizon time average".into(),
        per_replicate_cost: outcomes.iter().map(|o| o.valid.then_some(o.average_cost)).collect(),
        mean,
        std_error: se,
        ci95: [mean - 1.96 * se, mean + 1.96 * se],
        control_events: events,
        average_impulse: if events > 0 { impulse / events as f64 } else { 0.0 },
        arrivals: outcomes.iter().map(|o| o.arrivals).sum(),
        clamp_warnings: outcomes.iter().map(|o| o.clamps).sum(),
        invalid_replicates: outcomes.iter().filter(|o| !o.valid).count(),
        // Thinning is accurate when arrivals per step are rare.
        time_step_warning: spec.lambda() * config.time_step > 0.1,
        analytic_beta: None,
        z_score: None,
        config: *config,
    }
}

/// Runs all replicates (in parallel) and aggregates them in index order.
pub fn simulate_outcomes(
    spec: &ProblemSpec,
    policy: PolicySpec,
    config: &SimConfig,
) -> Result<Vec<ReplicateOutcome>, Error> {
    config.validate()?;
    if !spec.model.is_interior(policy.threshold) {
        return Err(Error::Config(format!("threshold {} is not interior to the state space", policy.threshold)));
    }
    if let Some(x0) = config.initial_state {
        if !spec.model.is_interior(x0) {
            return Err(Error::Config(format!("simulation.initial_state: {x0} is not interior")));
        }
    }
    Ok((0..config.replicates).into_par_iter().map(|r| simulate_replicate(spec, policy, config, r)).collect())
}

pub fn simulate_policy(spec: &ProblemSpec, policy: PolicySpec, config: &SimConfig) -> Result<SimReport, Error> {
    let outcomes = simulate_outcomes(spec, policy, config)?;
    Ok(aggregate(spec, policy, config, &outcomes))
}

/// Simulates at the solved threshold and compares with the analytic `β`.
pub fn estimate_beta(spec: &ProblemSpec, result: &SolveResult, config: &SimConfig) -> Result<SimReport, Error> {
    let mut report = simulate_policy(spec, PolicySpec { threshold: result.y_star }, config)?;
    report.analytic_beta = Some(result.beta);
    report.z_score = Some((report.mean - result.beta) / report.std_error);
    Ok(report)
}

/// Paired difference of one policy against the cheapest one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub threshold: f64,
    #[serde(deserialize_with = "ergodic_core::error::f64_or_nan")]
    pub mean: f64,
    #[serde(deserialize_with = "ergodic_core::error::f64_or_nan")]
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyComparison {
    pub reports: Vec<SimReport>,
    /// Index of the policy with the smallest estimated cost.
    pub best: usize,
    /// Cost minus the best policy's cost, replicate by replicate.
    pub versus_best: Vec<PairedDifference>,
    /// Whether every other policy costs more than the best by at least two
    /// paired standard errors.
    pub conclusive: bool,
}

/// Evaluates several thresholds on common random numbers.
pub fn compare_policies(spec: &ProblemSpec, thresholds: &[f64], config: &SimConfig) -> Result<PolicyComparison, Error> {
    if thresholds.is_empty() {
        return Err(Error::Config("compare_policies needs at least one threshold".into()));
    }
    let runs: Vec<Vec<ReplicateOutcome>> = thresholds
        .iter()
        .map(|&y| simulate_outcomes(spec, PolicySpec { threshold: y }, config))
        .collect::<Result<_, _>>()?;
    let reports: Vec<SimReport> =
        thresholds.iter().zip(&runs).map(|(&y, o)| aggregate(spec, PolicySpec { threshold: y }, config, o)).collect();
    let best = reports.iter().enumerate().min_by(|a, b| a.1.mean.total_cmp(&b.1.mean)).map(|(i, _)| i).unwrap_or(0);
    let versus_best: Vec<PairedDifference> = runs
        .iter()
        .zip(thresholds)
        .map(|(run, &y)| {
            let d: Vec<f64> = run
                .iter()
                .zip(&runs[best])
                .filter(|(a, b)| a.valid && b.valid)
                .map(|(a, b)| a.average_cost - b.average_cost)
                .collect();
            let n = d.len() as f64;
            let mean = d.iter().sum::<f64>() / n;
            let var =
                if d.len() > 1 { d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { f64::NAN };
            PairedDifference { threshold: y, mean, std_error: (var / n).sqrt() }
        })
        .collect();
    let conclusive = versus_best.iter().enumerate().all(|(i, d)| i == best || d.mean > 2.0 * d.std_error);
    Ok(PolicyComparison { reports, best, versus_best, conclusive })
}
