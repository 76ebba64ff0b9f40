//! Integrals against the speed measure: `∫_l^y g m′` from the lower boundary
//! and `∫_x^∞ g φ m′` toward `+∞`, the building blocks of every formula in
//! the solver.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fundamental::FundamentalPair;
use crate::model::{LowerBoundary, ProblemSpec};
use crate::quadrature::{integrate_estimate, integrate_lower_tail, integrate_piece, integrate_upper_tail, Integrand};

fn speed(spec: &ProblemSpec, z: f64) -> f64 {
    spec.model.speed_density(z).unwrap_or(f64::NAN)
}

fn lower_divergence(spec: &ProblemSpec, y: f64, e: Error) -> Error {
    match e {
        Error::Quadrature { .. } | Error::TailDivergence { .. } => Error::AssumptionViolation(format!(
            "integral against the speed measure diverges at the lower boundary {} (upper limit {y})",
            spec.lower()
        )),
        other => other,
    }
}

/// Points every integral is split at: the origin, where `|x|^p` costs have
/// their kink, and the scale anchor, where `m′ = 2/σ²` cannot underflow. A
/// kink next to an endpoint is invisible to the Kronrod nodes until the panels
/// are tiny, and a tail started where `m′` is exactly zero looks converged.
fn cuts(spec: &ProblemSpec) -> [f64; 2] {
    let anchor = spec.model.scale_anchor();
    match spec.model.lower() {
        LowerBoundary::NegInfinity => [anchor.min(0.0), anchor.max(0.0)],
        LowerBoundary::Zero => [anchor, anchor],
    }
}

/// `∫_x^∞ f`, split at the cuts above `x`.
fn split_upper<F: Fn(f64) -> f64>(spec: &ProblemSpec, f: F, x: f64) -> Result<f64> {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut lo = x;
    for c in cuts(spec) {
        if c > lo {
            pieces.push((lo, c));
            lo = c;
        }
    }
    let rest = integrate_upper_tail(Integrand::new(&f), lo, &spec.tolerances, None)?;
    add_pieces(spec, &f, pieces, rest.value, rest.l1)
}

/// `∫_l^y f`, split at the cuts below `y`.
fn split_lower<F: Fn(f64) -> f64>(spec: &ProblemSpec, f: F, y: f64) -> Result<f64> {
    let tol = &spec.tolerances;
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut hi = y;
    for c in cuts(spec).into_iter().rev() {
        if c < hi && spec.model.is_interior(c) {
            pieces.push((c, hi));
            hi = c;
        }
    }
    let (value, l1) = match spec.model.lower() {
        LowerBoundary::Zero => {
            let e = integrate_estimate(Integrand::new(&f).singular_at_lower(), 0.0, hi, tol.quad_tol)?;
            (e.value, e.l1)
        }
        LowerBoundary::NegInfinity => {
            let t = integrate_lower_tail(Integrand::new(&f), hi, tol, None)?;
            (t.value, t.l1)
        }
    };
    add_pieces(spec, &f, pieces, value, l1)
}

// Widest first, so a sliver next to a cut is measured against the mass
// already found rather than its own, which may be pure cancellation.
fn add_pieces<F: Fn(f64) -> f64>(
    spec: &ProblemSpec,
    f: &F,
    mut pieces: Vec<(f64, f64)>,
    mut value: f64,
    mut l1: f64,
) -> Result<f64> {
    let tol = spec.tolerances.quad_tol;
    pieces.sort_by(|p, q| (q.1 - q.0).total_cmp(&(p.1 - p.0)));
    for (a, b) in pieces {
        let e = integrate_piece(Integrand::new(f), a, b, tol, tol * l1)?;
        value += e.value;
        l1 += e.l1;
    }
    Ok(value)
}

/// `∫_l^y g(z) m′(z) dz`.
pub fn lower_integral<G: Fn(f64) -> f64>(spec: &ProblemSpec, y: f64, g: G) -> Result<f64> {
    if !spec.model.is_interior(y) {
        return Err(Error::ModelEvaluation { what: "upper limit", x: y });
    }
    let r = split_lower(spec, |z: f64| g(z) * speed(spec, z), y);
    r.map_err(|e| lower_divergence(spec, y, e))
}

/// `m(l, x) = ∫_l^x m′(z) dz`.
pub fn m_measure(spec: &ProblemSpec, x: f64) -> Result<f64> {
    lower_integral(spec, x, |_| 1.0)
}

/// `∫_x^∞ g(z) (φ(z)/φ(x)) m′(z) dz`, i.e. the φ-weighted tail divided by `φ(x)`.
pub fn upper_phi_integral<G: Fn(f64) -> f64>(spec: &ProblemSpec, pair: &FundamentalPair, x: f64, g: G) -> Result<f64> {
    let ln_phi_x = pair.ln_phi(x)?;
    let f = |z: f64| match (pair.ln_phi(z), spec.model.ln_speed_density(z)) {
        (Ok(a), Ok(b)) => g(z) * (a - ln_phi_x + b).exp(),
        _ => f64::NAN,
    };
    split_upper(spec, f, x)
}

/// `∫_x^∞ g(z) (φ(z)/φ(x)) (m′(z)/m′(x)) dz`. Since `S′(x) m′(x) = 2/σ²(x)`,
/// this is `S′(x)` times the φ-weighted tail up to that factor, and stays finite
/// where `S′(x)` overflows and the tail underflows.
pub fn upper_phi_speed_ratio_integral<G: Fn(f64) -> f64>(
    spec: &ProblemSpec,
    pair: &FundamentalPair,
    x: f64,
    g: G,
) -> Result<f64> {
    let shift = pair.ln_phi(x)? + spec.model.ln_speed_density(x)?;
    let f = |z: f64| match (pair.ln_phi(z), spec.model.ln_speed_density(z)) {
        (Ok(a), Ok(b)) => g(z) * (a + b - shift).exp(),
        _ => f64::NAN,
    };
    split_upper(spec, f, x)
}

/// `∫_l^x g(z) (ψ(z)/ψ(x)) m′(z) dz`.
pub fn lower_psi_integral<G: Fn(f64) -> f64>(spec: &ProblemSpec, pair: &FundamentalPair, x: f64, g: G) -> Result<f64> {
    let ln_psi_x = pair.ln_psi(x)?;
    let weighted = |z: f64| match (pair.ln_psi(z), spec.model.ln_speed_density(z)) {
        (Ok(a), Ok(b)) => g(z) * (a - ln_psi_x + b).exp(),
        _ => f64::NAN,
    };
    split_lower(spec, weighted, x).map_err(|e| lower_divergence(spec, x, e))
}
