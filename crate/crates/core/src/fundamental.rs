//! The decreasing and increasing fundamental solutions `φ`, `ψ` of
//! `(A − λ)f = 0`, from closed forms where the model has them and from a
//! Riccati-form ODE otherwise.
//!
//! Both solutions are carried in log form (`ln f` and `u = f′/f`) and
//! normalized to `φ(x_ref) = ψ(x_ref) = 1` at the scale anchor `x_ref`;
//! downstream formulas are invariant under separate positive rescalings.

use alloc::format;
use alloc::sync::Arc;
use core::fmt;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{ClosedForm, DiffusionModel, LowerBoundary, ProblemSpec};
use crate::ode::{self, OdeOptions, Trajectory};
use crate::special;

/// How a fundamental pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    ClosedForm,
    OdeNumeric,
}

#[derive(Clone)]
enum Kind {
    /// `φ ∝ x^α U(α, β, cx)`, `ψ ∝ x^α M(α, β, cx)` with `α` the positive
    /// characteristic root and `β = 1 + α₂ − α₁`.
    Verhulst {
        alpha: f64,
        beta: f64,
        c: f64,
    },
    /// `φ(x) = e^{bx²/2} D_ν(x√(2b))`, `ν = −λ/b`, and `ψ(x) = φ(−x)`.
    OrnsteinUhlenbeck {
        b: f64,
        nu: f64,
    },
    Ode(Arc<OdeSolutions>),
}

struct OdeSolutions {
    model: DiffusionModel,
    lambda: f64,
    /// `φ` integrated right to left, nodes in decreasing `x`.
    phi: Trajectory<2>,
    /// `ψ` integrated left to right, nodes in increasing `x`.
    psi: Trajectory<2>,
}

/// `φ`, `ψ`, their derivatives and the Wronskian `B = (ψ′φ − φ′ψ)/S′`.
#[derive(Clone)]
pub struct FundamentalPair {
    kind: Kind,
    lambda: f64,
    x_ref: f64,
    ln_phi_ref: f64,
    ln_psi_ref: f64,
    wronskian: f64,
    provenance: Provenance,
}

impl fmt::Debug for FundamentalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FundamentalPair")
            .field("lambda", &self.lambda)
            .field("x_ref", &self.x_ref)
            .field("wronskian", &self.wronskian)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

/// Roots `α₁ < 0 < α₂` of `½σ²α(α−1) + μα − λ = 0`.
pub fn verhulst_exponents(mu: f64, sigma: f64, lambda: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let h = 0.5 - mu / s2;
    let r = (h * h + 2.0 * lambda / s2).sqrt();
    (h - r, h + r)
}

fn riccati(model: &DiffusionModel, lambda: f64, x: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
    let s = model.checked_volatility(x)?;
    let mu = model.drift(x);
    if !mu.is_finite() {
        return Err(Error::ModelEvaluation { what: "drift", x });
    }
    let u = y[1];
    Ok([u, 2.0 * (lambda - mu * u) / (s * s) - u * u])
}

/// Roots of `u² + (2μ/σ²)u − 2λ/σ² = 0`: the local log-slopes of `φ` and `ψ`.
fn wkb_slopes(model: &DiffusionModel, lambda: f64, x: f64) -> Result<(f64, f64, f64)> {
    let s = model.checked_volatility(x)?;
    let p = model.drift_ratio(x)?;
    let disc = (p * p + 8.0 * lambda / (s * s)).sqrt();
    Ok((0.5 * (-p - disc), 0.5 * (-p + disc), disc))
}

impl OdeSolutions {
    fn eval(&self, traj: &Trajectory<2>, increasing: bool, x: f64) -> Result<(f64, f64)> {
        let n = traj.xs.len();
        let (first, last) = (traj.xs[0], traj.xs[n - 1]);
        let (lo_i, hi_i) = if increasing { (0, n - 1) } else { (n - 1, 0) };
        let (x_lo, x_hi) = if increasing { (first, last) } else { (last, first) };
        // Outside the integration window the log-slope is frozen.
        if x <= x_lo {
            let y = traj.ys[lo_i];
            return Ok((y[0] + y[1] * (x - x_lo), y[1]));
        }
        if x >= x_hi {
            let y = traj.ys[hi_i];
            return Ok((y[0] + y[1] * (x - x_hi), y[1]));
        }
        // Start from the neighbouring node on the side the solution was
        // integrated from, so the single dense step runs in the stable direction.
        let idx = if increasing {
            traj.xs.partition_point(|&t| t <= x) - 1
        } else {
            traj.xs.partition_point(|&t| t >= x) - 1
        };
        let (x0, y0) = (traj.xs[idx], traj.ys[idx]);
        if x0 == x {
            return Ok((y0[0], y0[1]));
        }
        let f = |t: f64, y: &[f64; 2]| riccati(&self.model, self.lambda, t, y);
        let (y, _) = ode::dp5_step(&f, x0, &y0, x - x0)?;
        Ok((y[0], y[1]))
    }
}

impl FundamentalPair {
    fn raw_phi(&self, x: f64) -> Result<(f64, f64)> {
        match &self.kind {
            Kind::Verhulst { alpha, beta, c } => {
                let z = c * x;
                let l = alpha * x.ln() + special::ln_kummer_u(*alpha, *beta, z)?;
                let u = alpha / x + c * special::kummer_u_log_derivative(*alpha, *beta, z)?;
                Ok((l, u))
            }
            Kind::OrnsteinUhlenbeck { b, nu } => {
                let s = (2.0 * b).sqrt();
                let l = 0.5 * b * x * x + special::ln_parabolic_cylinder_d(*nu, x * s)?;
                let u = b * x + s * special::parabolic_cylinder_d_log_derivative(*nu, x * s)?;
                Ok((l, u))
            }
            Kind::Ode(sol) => sol.eval(&sol.phi, false, x),
        }
    }

    fn raw_ln_phi(&self, x: f64) -> Result<f64> {
        match &self.kind {
            Kind::Verhulst { alpha, beta, c } => Ok(alpha * x.ln() + special::ln_kummer_u(*alpha, *beta, c * x)?),
            Kind::OrnsteinUhlenbeck { b, nu } => {
                let s = (2.0 * b).sqrt();
                Ok(0.5 * b * x * x + special::ln_parabolic_cylinder_d(*nu, x * s)?)
            }
            Kind::Ode(_) => self.raw_phi(x).map(|p| p.0),
        }
    }

    fn raw_psi(&self, x: f64) -> Result<(f64, f64)> {
        match &self.kind {
            Kind::Verhulst { alpha, beta, c } => {
                let z = c * x;
                let l = alpha * x.ln() + special::ln_kummer_m(*alpha, *beta, z)?;
                let u = alpha / x + c * special::kummer_m_log_derivative(*alpha, *beta, z)?;
                Ok((l, u))
            }
            Kind::OrnsteinUhlenbeck { .. } => {
                let (l, u) = self.raw_phi(-x)?;
                Ok((l, -u))
            }
            Kind::Ode(sol) => sol.eval(&sol.psi, true, x),
        }
    }

    fn check_interior(&self, x: f64) -> Result<()> {
        let ok = match &self.kind {
            Kind::Verhulst { .. } => x > 0.0 && x.is_finite(),
            Kind::OrnsteinUhlenbeck { .. } => x.is_finite(),
            Kind::Ode(sol) => sol.model.is_interior(x),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ModelEvaluation { what: "fundamental solution", x })
        }
    }

    fn finish(kind: Kind, spec: &ProblemSpec, provenance: Provenance) -> Result<Self> {
        let x_ref = spec.model.scale_anchor();
        let mut pair = FundamentalPair {
            kind,
            lambda: spec.intensity,
            x_ref,
            ln_phi_ref: 0.0,
            ln_psi_ref: 0.0,
            wronskian: f64::NAN,
            provenance,
        };
        let (lp, up) = pair.raw_phi(x_ref)?;
        let (lq, uq) = pair.raw_psi(x_ref)?;
        pair.ln_phi_ref = lp;
        pair.ln_psi_ref = lq;
        pair.wronskian = (uq - up) / spec.model.scale_density(x_ref)?;
        if !(pair.wronskian > 0.0 && pair.wronskian.is_finite()) {
            return Err(Error::FundamentalSolution(format!(
                "non-positive Wronskian {} at x = {x_ref}",
                pair.wronskian
            )));
        }
        Ok(pair)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Point where both solutions equal one.
    pub fn x_ref(&self) -> f64 {
        self.x_ref
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `B = (ψ′φ − φ′ψ)/S′`, constant in `x`.
    pub fn wronskian(&self) -> f64 {
        self.wronskian
    }

    pub fn ln_phi(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self.raw_ln_phi(x)? - self.ln_phi_ref)
    }

    /// `φ′(x)/φ(x)`.
    pub fn phi_log_derivative(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        self.raw_phi(x).map(|p| p.1)
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        self.ln_phi(x).map(f64::exp)
    }

    pub fn phi_prime(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        let (l, u) = self.raw_phi(x)?;
        Ok((l - self.ln_phi_ref).exp() * u)
    }

    pub fn ln_psi(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self.raw_psi(x)?.0 - self.ln_psi_ref)
    }

    /// `ψ′(x)/ψ(x)`.
    pub fn psi_log_derivative(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        self.raw_psi(x).map(|p| p.1)
    }

    pub fn psi(&self, x: f64) -> Result<f64> {
        self.ln_psi(x).map(f64::exp)
    }

    pub fn psi_prime(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        let (l, u) = self.raw_psi(x)?;
        Ok((l - self.ln_psi_ref).exp() * u)
    }

    /// The same pair with `φ` multiplied by `phi_factor` and `ψ` by `psi_factor`.
    pub fn rescaled(&self, phi_factor: f64, psi_factor: f64) -> Result<Self> {
        if !(phi_factor > 0.0 && psi_factor > 0.0 && phi_factor.is_finite() && psi_factor.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rescaling factor",
                detail: format!("must be positive and finite, got ({phi_factor}, {psi_factor})"),
            });
        }
        let mut p = self.clone();
        p.ln_phi_ref -= phi_factor.ln();
        p.ln_psi_ref -= psi_factor.ln();
        p.wronskian *= phi_factor * psi_factor;
        Ok(p)
    }
}

/// Closed-form pair for tagged models, ODE pair otherwise.
pub fn build_pair(spec: &ProblemSpec) -> Result<FundamentalPair> {
    let lambda = spec.intensity;
    match spec.model.closed_form() {
        ClosedForm::VerhulstPearl { mu, sigma, b } => {
            let (a1, a2) = verhulst_exponents(mu, sigma, lambda);
            let kind = Kind::Verhulst { alpha: a2, beta: 1.0 + a2 - a1, c: 2.0 * mu * b / (sigma * sigma) };
            FundamentalPair::finish(kind, spec, Provenance::ClosedForm)
        }
        ClosedForm::OrnsteinUhlenbeck { b } => {
            let kind = Kind::OrnsteinUhlenbeck { b, nu: -lambda / b };
            FundamentalPair::finish(kind, spec, Provenance::ClosedForm)
        }
        ClosedForm::None => ode_pair(spec),
    }
}

const CORE_DROP: f64 = 46.0;
const WKB_UNITS: f64 = 40.0;

/// Far end of the region carrying the speed measure, scanning outward from
/// `x_ref` by doubling. The scan is capped so that `ln f` stays small enough
/// to be resolved in double precision.
fn core_end(model: &DiffusionModel, x_ref: f64, right: bool) -> Result<f64> {
    let mut peak = model.ln_speed_density(x_ref)?;
    let mut end = x_ref;
    for k in 0..15 {
        let x = if right {
            x_ref + 2f64.powi(k)
        } else {
            match model.lower() {
                LowerBoundary::Zero => x_ref * 0.5f64.powi(k + 1),
                LowerBoundary::NegInfinity => x_ref - 2f64.powi(k),
            }
        };
        let v = model.ln_speed_density(x)?;
        end = x;
        peak = peak.max(v);
        if v < peak - CORE_DROP && k >= 2 {
            break;
        }
    }
    Ok(end)
}

/// Moves outward from `x` until `∫√disc` (the log-gap between the decaying
/// and growing WKB modes) reaches `units`.
fn wkb_extend(model: &DiffusionModel, lambda: f64, mut x: f64, right: bool, units: f64) -> Result<f64> {
    let mut acc = 0.0;
    for _ in 0..100_000 {
        if acc >= units {
            break;
        }
        let (_, _, rate) = wkb_slopes(model, lambda, x)?;
        let mut dx = 1.0 / rate;
        if !right && model.lower() == LowerBoundary::Zero {
            dx = dx.min(0.5 * x);
        }
        acc += rate * dx;
        x += if right { dx } else { -dx };
    }
    Ok(x)
}

/// Pair from integrating the Riccati equation `u′ = 2(λ − μu)/σ² − u²`
/// (with `(ln f)′ = u`): `φ` backward from a far-right point, `ψ` forward
/// from near the lower boundary, both started on their WKB slopes.
pub fn ode_pair(spec: &ProblemSpec) -> Result<FundamentalPair> {
    let model = spec.model.clone();
    let lambda = spec.intensity;
    let x_ref = model.scale_anchor();
    let core_hi = core_end(&model, x_ref, true)?;
    let core_lo = core_end(&model, x_ref, false)?;
    let rhs = |x: f64, y: &[f64; 2]| riccati(&model, lambda, x, y);

    let mut units = WKB_UNITS;
    for _ in 0..4 {
        let x_r = wkb_extend(&model, lambda, core_hi, true, units)?;
        let x_l = wkb_extend(&model, lambda, core_lo, false, units)?;

        let (u_phi, _, rate_r) = wkb_slopes(&model, lambda, x_r)?;
        let opts = OdeOptions { initial_step: 0.1 / rate_r, ..OdeOptions::default() };
        let phi = ode::solve(&rhs, x_r, [0.0, u_phi], x_l, &opts)?;

        let (_, u_psi, rate_l) = wkb_slopes(&model, lambda, x_l)?;
        let mut h0 = 0.1 / rate_l;
        if model.lower() == LowerBoundary::Zero {
            h0 = h0.min(0.1 * x_l);
        }
        let opts = OdeOptions { initial_step: h0, ..OdeOptions::default() };
        let psi = ode::solve(&rhs, x_l, [0.0, u_psi], x_r, &opts)?;

        // The growing mode shows up as a non-negative slope of φ (or a
        // non-positive slope of ψ); push the start points further out.
        let clean = phi.ys.iter().all(|y| y[1] < 0.0) && psi.ys.iter().all(|y| y[1] > 0.0);
        if clean {
            let sol = OdeSolutions { model: model.clone(), lambda, phi, psi };
            return FundamentalPair::finish(Kind::Ode(Arc::new(sol)), spec, Provenance::OdeNumeric);
        }
        units *= 2.0;
    }
    Err(Error::FundamentalSolution(format!("ODE route could not produce a monotone decreasing φ for λ = {lambda}")))
}
