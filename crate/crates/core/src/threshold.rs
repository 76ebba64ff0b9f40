//! The optimal threshold: auxiliary functions `L`, `H`, the optimality
//! residual `P`, their roots `x̃ < y* < x̂`, both expressions for the
//! average cost `β`, and sweeps over the signal intensity.
//!
//! `L` and `P` carry a factor `φ(x)`; the solver works with `L/φ(x)` and
//! `P/φ(x)`, which have the same signs and roots but stay O(1) where `φ`
//! is huge or tiny.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fundamental::{build_pair, FundamentalPair, Provenance};
use crate::measure::{lower_integral, m_measure, upper_phi_integral, upper_phi_speed_ratio_integral};
use crate::model::{LowerBoundary, ProblemSpec};
use crate::roots::{brent, expand_until_sign};

/// Relative tolerance for `|β_below − β_above| ≤ tol·|β|`.
pub const BETA_CONSISTENCY_TOL: f64 = 1e-6;

const MAX_EXPANSIONS: usize = 60;

/// Tolerances achieved and work done by a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    pub quad_tol: f64,
    pub root_tol: f64,
    pub tail_tol: f64,
    /// Final Brent bracket width around `y*`.
    pub y_bracket_width: f64,
    pub residual_evaluations: usize,
    /// `|β_below − β_above| / |β|`.
    pub beta_relative_gap: f64,
    pub beta_consistent: bool,
}

/// Everything the solver learns about one problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveResult {
    pub lambda: f64,
    pub x_star: f64,
    pub x_tilde: f64,
    pub x_hat: f64,
    pub y_star: f64,
    pub beta_below: f64,
    pub beta_above: f64,
    /// Mean of the two β expressions.
    pub beta: f64,
    /// `P(y*)` divided by `S′(y*) m(l, y*) |L(x̂)|`.
    pub residual_p: f64,
    /// `x̃ < y* < x̂`.
    pub bracket_ok: bool,
    /// Threshold of the unconstrained (singular) problem; equals `x̂`.
    pub singular_threshold: f64,
    pub provenance: Provenance,
    pub diagnostics: Diagnostics,
}

impl SolveResult {
    /// `y*ₛ − y*`.
    pub fn gap(&self) -> f64 {
        self.singular_threshold - self.y_star
    }
}

fn finite_or(what: &'static str, x: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ModelEvaluation { what, x })
    }
}

/// `L(x)/φ(x) = λ ∫_x^∞ (π_μ(z) − π_μ(x)) (φ(z)/φ(x)) m′(z) dz`.
pub fn l_scaled(spec: &ProblemSpec, pair: &FundamentalPair, x: f64) -> Result<f64> {
    let p = finite_or("pi_mu", x, spec.pi_mu(x))?;
    let v = upper_phi_integral(spec, pair, x, |z| spec.pi_mu(z) - p)?;
    Ok(spec.lambda() * v)
}

/// `L(x) = λ ∫_x^∞ π_μ φ m′ + (φ′(x)/S′(x)) π_μ(x)`, computed in the
/// subtracted form `λ ∫_x^∞ (π_μ(z) − π_μ(x)) φ(z) m′(z) dz`.
pub fn l_function(spec: &ProblemSpec, pair: &FundamentalPair, x: f64) -> Result<f64> {
    Ok(l_scaled(spec, pair, x)? * pair.phi(x)?)
}

/// `H(x) = ∫_l^x π_μ m′ − π_μ(x) m(l, x) = ∫_l^x (π_μ(z) − π_μ(x)) m′(z) dz`.
pub fn h_function(spec: &ProblemSpec, x: f64) -> Result<f64> {
    let p = finite_or("pi_mu", x, spec.pi_mu(x))?;
    lower_integral(spec, x, |z| spec.pi_mu(z) - p)
}

/// `P(x)/φ(x) = S′(x) m(l,x) L(x)/φ(x) + (φ′(x)/φ(x)) H(x)`.
pub fn residual_p_scaled(spec: &ProblemSpec, pair: &FundamentalPair, x: f64) -> Result<f64> {
    let m = m_measure(spec, x)?;
    let sl = s_times_l_scaled(spec, pair, x)?;
    let u = pair.phi_log_derivative(x)?;
    let h = h_function(spec, x)?;
    Ok(m * sl + u * h)
}

/// `S′(x) L(x)/φ(x)`, formed without `S′(x)` itself, which overflows far out
/// while `L/φ` underflows.
fn s_times_l_scaled(spec: &ProblemSpec, pair: &FundamentalPair, x: f64) -> Result<f64> {
    let p = finite_or("pi_mu", x, spec.pi_mu(x))?;
    let sigma = spec.model.checked_volatility(x)?;
    let v = upper_phi_speed_ratio_integral(spec, pair, x, |z| spec.pi_mu(z) - p)?;
    Ok(spec.lambda() * 2.0 / (sigma * sigma) * v)
}

/// `P(x) = S′(x) m(l,x) L(x) + φ′(x) H(x)`: negative below `y*`, positive above.
pub fn residual_p(spec: &ProblemSpec, pair: &FundamentalPair, x: f64) -> Result<f64> {
    Ok(residual_p_scaled(spec, pair, x)? * pair.phi(x)?)
}

/// Steps `x* ∓ d, x* ∓ 2d, …` (halving toward 0 on the half line).
fn stepper(spec: &ProblemSpec, right: bool) -> impl FnMut(f64) -> f64 {
    let d0 = 0.1 * spec.x_star().abs().max(1.0);
    let half_line = spec.model.lower() == LowerBoundary::Zero;
    let mut d = d0;
    move |x| {
        if right {
            let n = x + d;
            d *= 2.0;
            n
        } else if half_line {
            0.5 * x
        } else {
            let n = x - d;
            d *= 2.0;
            n
        }
    }
}

/// Root `x̃ < x*` of `L`, bracketed by expanding leftward from `x*`.
pub fn find_x_tilde(spec: &ProblemSpec, pair: &FundamentalPair) -> Result<f64> {
    // S′L/φ has the sign and root of L and stays O(1) where L/φ underflows.
    let f = |x: f64| s_times_l_scaled(spec, pair, x);
    let (inner, outer) = expand_until_sign(f, spec.x_star(), stepper(spec, false), true, MAX_EXPANSIONS, "L")?;
    Ok(brent(f, outer, inner, spec.tolerances.root_tol)?.x)
}

/// Root `x̂ > x*` of `H`, bracketed by expanding rightward from `x*`.
pub fn find_x_hat(spec: &ProblemSpec) -> Result<f64> {
    let f = |x: f64| h_function(spec, x);
    let (inner, outer) = expand_until_sign(f, spec.x_star(), stepper(spec, true), true, MAX_EXPANSIONS, "H")?;
    Ok(brent(f, inner, outer, spec.tolerances.root_tol)?.x)
}

/// `β` from below: `∫_l^y π_μ m′ / m(l, y)`.
pub fn beta_below(spec: &ProblemSpec, y: f64) -> Result<f64> {
    let num = lower_integral(spec, y, |z| spec.pi_mu(z))?;
    Ok(num / m_measure(spec, y)?)
}

/// `β` from above: `∫_y^∞ φ π_μ m′ / ∫_y^∞ φ m′`.
pub fn beta_above(spec: &ProblemSpec, pair: &FundamentalPair, y: f64) -> Result<f64> {
    let num = upper_phi_speed_ratio_integral(spec, pair, y, |z| spec.pi_mu(z))?;
    let den = upper_phi_speed_ratio_integral(spec, pair, y, |_| 1.0)?;
    Ok(num / den)
}

/// Solves `P(y) = 0` on `(x̃, x̂)` and evaluates `β` both ways at the root.
pub fn solve_threshold(spec: &ProblemSpec, pair: &FundamentalPair) -> Result<SolveResult> {
    let tol = spec.tolerances;
    let x_tilde = find_x_tilde(spec, pair)?;
    let x_hat = find_x_hat(spec)?;
    if !(x_tilde < x_hat) {
        return Err(Error::Solver(format!("root of L ({x_tilde}) is not below root of H ({x_hat})")));
    }
    let eps = (10.0 * tol.root_tol).min(0.25 * (x_hat - x_tilde));
    let mut evaluations = 0usize;
    let mut p = |x: f64| {
        evaluations += 1;
        residual_p_scaled(spec, pair, x)
    };
    let (a, b) = (x_tilde + eps, x_hat - eps);
    let (pa, pb) = (p(a)?, p(b)?);
    if !(pa < 0.0 && pb > 0.0) {
        return Err(Error::Solver(format!(
            "P not bracketed on [{a}, {b}]: P/φ = ({pa:e}, {pb:e}); x̃ = {x_tilde}, x̂ = {x_hat}"
        )));
    }
    let root = brent(&mut p, a, b, tol.root_tol)?;
    let y = root.x;

    // |S′(y) m(l,y) L(x̂)/φ(y)|, in logs.
    let ln_scale =
        spec.model.ln_scale_density(y)? + m_measure(spec, y)?.ln() + s_times_l_scaled(spec, pair, x_hat)?.abs().ln()
            - spec.model.ln_scale_density(x_hat)?
            + pair.ln_phi(x_hat)?
            - pair.ln_phi(y)?;
    let residual = root.fx / ln_scale.exp();

    let below = beta_below(spec, y)?;
    let above = beta_above(spec, pair, y)?;
    let beta = 0.5 * (below + above);
    let gap = (below - above).abs() / beta.abs().max(f64::MIN_POSITIVE);

    Ok(SolveResult {
        lambda: spec.lambda(),
        x_star: spec.x_star(),
        x_tilde,
        x_hat,
        y_star: y,
        beta_below: below,
        beta_above: above,
        beta,
        residual_p: residual,
        bracket_ok: x_tilde < y && y < x_hat,
        singular_threshold: x_hat,
        provenance: pair.provenance(),
        diagnostics: Diagnostics {
            quad_tol: tol.quad_tol,
            root_tol: tol.root_tol,
            tail_tol: tol.tail_tol,
            y_bracket_width: root.bracket_width,
            residual_evaluations: evaluations + 2,
            beta_relative_gap: gap,
            beta_consistent: gap <= BETA_CONSISTENCY_TOL,
        },
    })
}

/// Builds the fundamental pair and solves in one call.
pub fn solve(spec: &ProblemSpec) -> Result<SolveResult> {
    let pair = build_pair(spec)?;
    solve_threshold(spec, &pair)
}

/// One row of a sweep; failures are kept and the sweep moves on.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub lambda: f64,
    pub outcome: Result<SolveResult>,
}

/// Checks that a λ-grid is positive and strictly ascending.
pub fn check_lambda_grid(lambdas: &[f64]) -> Result<()> {
    for (i, &l) in lambdas.iter().enumerate() {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambdas",
                detail: format!("entry {i} is {l}; intensities must be positive"),
            });
        }
        if i > 0 && l <= lambdas[i - 1] {
            return Err(Error::InvalidParameter {
                name: "lambdas",
                detail: format!("entries must be strictly ascending ({} then {l})", lambdas[i - 1]),
            });
        }
    }
    Ok(())
}

/// Solves the base problem at each intensity in `lambdas` (ascending).
pub fn lambda_sweep(base: &ProblemSpec, lambdas: &[f64]) -> Result<Vec<SweepEntry>> {
    check_lambda_grid(lambdas)?;
    Ok(lambdas
        .iter()
        .map(|&lambda| SweepEntry { lambda, outcome: base.with_intensity(lambda).and_then(|s| solve(&s)) })
        .collect())
}

/// Whether the solved thresholds increase with `λ` and stay below `y*ₛ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepShape {
    pub strictly_increasing: bool,
    pub below_singular: bool,
}

pub fn sweep_shape(entries: &[SweepEntry]) -> SweepShape {
    let solved: Vec<&SolveResult> = entries.iter().filter_map(|e| e.outcome.as_ref().ok()).collect();
    SweepShape {
        strictly_increasing: solved.windows(2).all(|w| w[0].y_star < w[1].y_star),
        below_singular: solved.iter().all(|r| r.y_star < r.singular_threshold),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, DiffusionModel};
    use crate::quadrature::Tolerances;

    fn ou(lambda: f64) -> ProblemSpec {
        let model = DiffusionModel::ornstein_uhlenbeck(1.0).unwrap();
        ProblemSpec::new(model, CostModel::absolute(0.1), lambda, Tolerances::default()).unwrap()
    }

    /// For dX = −X dt + dW, π = |x|, γ = 0.1 and x > 0:
    /// H(x) = 2 − (1 − γ)e^{−x²} − (1 − γ) x √π (1 + erf x).
    fn ou_h_exact(x: f64) -> f64 {
        let g = 0.1;
        let e = (-x * x).exp();
        2.0 - (1.0 - g) * e - (1.0 - g) * x * core::f64::consts::PI.sqrt() * (1.0 + libm::erf(x))
    }

    #[test]
    fn h_matches_closed_form() {
        let spec = ou(10.0);
        for x in [0.05, 0.3, 0.535, 1.0, 2.5] {
            let h = h_function(&spec, x).unwrap();
            assert!((h - ou_h_exact(x)).abs() < 1e-10, "x={x}: {h} vs {}", ou_h_exact(x));
        }
    }

    #[test]
    fn singular_threshold_is_independent_of_lambda() {
        let a = find_x_hat(&ou(1.0)).unwrap();
        let b = find_x_hat(&ou(300.0)).unwrap();
        assert_eq!(a, b);
        assert!(ou_h_exact(a).abs() < 1e-9);
    }

    #[test]
    fn residual_signs_at_bracket_ends() {
        let spec = ou(10.0);
        let pair = build_pair(&spec).unwrap();
        let r = solve_threshold(&spec, &pair).unwrap();
        assert!(r.bracket_ok);
        assert!(residual_p(&spec, &pair, r.x_tilde + 1e-6).unwrap() < 0.0);
        assert!(residual_p(&spec, &pair, r.x_hat - 1e-6).unwrap() > 0.0);
        assert!(r.residual_p.abs() < 1e-8);
        assert!(r.diagnostics.beta_consistent);
    }

    #[test]
    fn rescaling_phi_leaves_threshold_unchanged() {
        let spec = ou(5.0);
        let pair = build_pair(&spec).unwrap();
        let a = solve_threshold(&spec, &pair).unwrap();
        let b = solve_threshold(&spec, &pair.rescaled(1e7, 3.0).unwrap()).unwrap();
        assert!((a.y_star - b.y_star).abs() < 1e-10);
    }

    #[test]
    fn lambda_grid_validation() {
        assert!(check_lambda_grid(&[]).is_ok());
        assert!(check_lambda_grid(&[1.0, 5.0]).is_ok());
        assert!(check_lambda_grid(&[5.0, 1.0]).is_err());
        assert!(check_lambda_grid(&[1.0, 1.0]).is_err());
        assert!(check_lambda_grid(&[0.0]).is_err());
        assert!(check_lambda_grid(&[f64::NAN]).is_err());
    }

    #[test]
    fn sweep_keeps_going_after_failures() {
        let spec = ou(1.0);
        let entries = lambda_sweep(&spec, &[1.0, 10.0]).unwrap();
        assert_eq!(entries.len(), 2);
        let shape = sweep_shape(&entries);
        assert!(shape.strictly_increasing && shape.below_singular);
    }
}
