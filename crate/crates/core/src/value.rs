//! The resolvent, the potential value function `W` (normalized so that
//! `W(y*) = 0`), and the diagnostics that certify a solved instance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fundamental::FundamentalPair;
use crate::interp::PiecewiseChebyshev;
use crate::measure::{lower_psi_integral, upper_phi_integral};
use crate::model::{LowerBoundary, ProblemSpec};
use crate::quadrature::{integrate, Integrand};
use crate::threshold::{beta_below, SolveResult};

/// `(R_λ f)(x) = E_x ∫₀^∞ e^{−λs} f(X_s) ds`
/// `= B⁻¹[ψ(x) ∫_x^∞ φ f m′ + φ(x) ∫_l^x ψ f m′]`.
pub fn resolvent<F: Fn(f64) -> f64>(spec: &ProblemSpec, pair: &FundamentalPair, f: F, x: f64) -> Result<f64> {
    let (above, below, w) = resolvent_parts(spec, pair, &f, x)?;
    Ok(w * (above + below))
}

/// `(R_λ f)′(x) = B⁻¹[ψ′(x) ∫_x^∞ φ f m′ + φ′(x) ∫_l^x ψ f m′]`.
pub fn resolvent_prime<F: Fn(f64) -> f64>(spec: &ProblemSpec, pair: &FundamentalPair, f: F, x: f64) -> Result<f64> {
    let (above, below, w) = resolvent_parts(spec, pair, &f, x)?;
    Ok(w * (pair.psi_log_derivative(x)? * above + pair.phi_log_derivative(x)? * below))
}

// Both integrals divided by φ(x) resp. ψ(x), and the common factor φψ/B.
fn resolvent_parts<F: Fn(f64) -> f64>(
    spec: &ProblemSpec,
    pair: &FundamentalPair,
    f: &F,
    x: f64,
) -> Result<(f64, f64, f64)> {
    let above = upper_phi_integral(spec, pair, x, f)?;
    let below = lower_psi_integral(spec, pair, x, f)?;
    let w = (pair.ln_phi(x)? + pair.ln_psi(x)?).exp() / pair.wronskian();
    Ok((above, below, w))
}

/// `J(x) = (γ − (R_λ π_γ)′(x)) / φ′(x)`; minimal at `x̃`.
pub fn j_function(spec: &ProblemSpec, pair: &FundamentalPair, x: f64) -> Result<f64> {
    let r = resolvent_prime(spec, pair, |z| spec.pi_gamma(z), x)?;
    Ok((spec.gamma() - r) / pair.phi_prime(x)?)
}

/// `I(x) = ∫_l^x π_μ m′ / m(l, x)`; minimal at `x̂`.
pub fn i_function(spec: &ProblemSpec, x: f64) -> Result<f64> {
    beta_below(spec, x)
}

/// Potential value function of a solved instance.
///
/// Above `y*`: `W = R_λπ_γ − β/λ − γy* + Cφ` (minus its value at `y*`).
/// Below `y*`: `W′(y) = S′(y)[γ/S′(y*) − ∫_y^{y*} (β − π) m′]`, `W(x) = −∫_x^{y*} W′`.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    spec: ProblemSpec,
    pair: FundamentalPair,
    pub y_star: f64,
    pub beta: f64,
    /// Coefficient of `φ` in the action region.
    pub c: f64,
    /// Value of the unshifted action-region formula at `y*`; zero up to
    /// solver tolerance when `y*` solves the optimality equation.
    pub continuity_defect: f64,
    /// Antiderivative of `(β − π)m′` on a window below `y*`.
    inner: PiecewiseChebyshev,
}

impl ValueFunction {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn pair(&self) -> &FundamentalPair {
        &self.pair
    }

    /// Number of Chebyshev pieces caching the inner antiderivative.
    pub fn cache_pieces(&self) -> usize {
        self.inner.pieces()
    }

    /// `∫_y^{y*} (β − π) m′`.
    fn inner_integral(&self, y: f64) -> Result<f64> {
        let (a, b) = self.inner.domain();
        if y >= a && y <= b {
            return Ok(self.inner.eval(b) - self.inner.eval(y));
        }
        if y < a {
            // Keep the direct quadrature off the window, where π may have kinks.
            return Ok(inner_direct(&self.spec, self.beta, a, y)? + self.inner.eval(b) - self.inner.eval(a));
        }
        inner_direct(&self.spec, self.beta, self.y_star, y)
    }

    /// `W′` from the continuation-region formula (valid for any interior `x`).
    pub fn derivative_below(&self, y: f64) -> Result<f64> {
        let s = self.spec.model.scale_density(y)?;
        let s_star = self.spec.model.scale_density(self.y_star)?;
        Ok(s * (self.spec.gamma() / s_star - self.inner_integral(y)?))
    }

    /// `W′` from the action-region formula (valid for any interior `x`).
    pub fn derivative_above(&self, x: f64) -> Result<f64> {
        let r = resolvent_prime(&self.spec, &self.pair, |z| self.spec.pi_gamma(z), x)?;
        Ok(r + self.c * self.pair.phi_prime(x)?)
    }

    fn value_above(&self, x: f64) -> Result<f64> {
        let r = resolvent(&self.spec, &self.pair, |z| self.spec.pi_gamma(z), x)?;
        Ok(r - self.beta / self.spec.lambda() - self.spec.gamma() * self.y_star + self.c * self.pair.phi(x)?
            - self.continuity_defect)
    }

    fn value_below(&self, x: f64) -> Result<f64> {
        let mut failure = None;
        let v = integrate(
            Integrand::new(|y: f64| match self.derivative_below(y) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }),
            x,
            self.y_star,
            self.spec.tolerances.quad_tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(-v?)
    }

    /// `W(x)`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if x == self.y_star {
            Ok(0.0)
        } else if x < self.y_star {
            self.value_below(x)
        } else {
            self.value_above(x)
        }
    }

    /// `W′(x)`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if x < self.y_star {
            self.derivative_below(x)
        } else {
            self.derivative_above(x)
        }
    }

    /// `W″` by centered differences of `W′` with `h = max(1e−5, 1e−4|x|)`.
    pub fn second_derivative(&self, x: f64) -> Result<f64> {
        let h = fd_step(x);
        Ok((self.derivative(x + h)? - self.derivative(x - h)?) / (2.0 * h))
    }

    /// One-sided `W″(y*±)`, each from second-order differences of `W′`
    /// taken on its own side of `y*` only.
    pub fn second_derivatives_at_threshold(&self) -> Result<(f64, f64)> {
        let y = self.y_star;
        let h = fd_step(y);
        let below = (3.0 * self.derivative_below(y)? - 4.0 * self.derivative_below(y - h)?
            + self.derivative_below(y - 2.0 * h)?)
            / (2.0 * h);
        let above = (-3.0 * self.derivative_above(y)? + 4.0 * self.derivative_above(y + h)?
            - self.derivative_above(y + 2.0 * h)?)
            / (2.0 * h);
        Ok((below, above))
    }

    /// `(2/σ²(y*))(β − π_μ(y*))`, the smooth-fit value of `W″(y*)`.
    pub fn smooth_fit_target(&self) -> Result<f64> {
        let s = self.spec.model.checked_volatility(self.y_star)?;
        Ok(2.0 / (s * s) * (self.beta - self.spec.pi_mu(self.y_star)))
    }
}

/// Finite-difference step used by every second-derivative diagnostic.
pub fn fd_step(x: f64) -> f64 {
    1e-5f64.max(1e-4 * x.abs())
}

fn inner_direct(spec: &ProblemSpec, beta: f64, upper: f64, y: f64) -> Result<f64> {
    let f = |z: f64| match spec.model.speed_density(z) {
        Ok(m) => (beta - spec.cost.running_cost(z)) * m,
        Err(_) => f64::NAN,
    };
    integrate(Integrand::new(f), y, upper, spec.tolerances.quad_tol)
}

/// Builds `W` for a solved instance.
pub fn build_value_function(spec: &ProblemSpec, pair: &FundamentalPair, result: &SolveResult) -> Result<ValueFunction> {
    if !result.bracket_ok {
        return Err(Error::Solver(format!(
            "threshold {} is not bracketed by ({}, {})",
            result.y_star, result.x_tilde, result.x_hat
        )));
    }
    let y = result.y_star;
    let gamma = spec.gamma();
    let r_prime = resolvent_prime(spec, pair, |z| spec.pi_gamma(z), y)?;
    let c = (gamma - r_prime) / pair.phi_prime(y)?;
    let r = resolvent(spec, pair, |z| spec.pi_gamma(z), y)?;
    let defect = r - result.beta / spec.lambda() - gamma * y + c * pair.phi(y)?;

    // Cache ∫_y^{y*}(β − π)m′ on a window reaching well below x̃: fit the
    // integrand piecewise and integrate the expansion exactly.
    let width = 2.0 * (y - result.x_tilde).max(0.1 * y.abs().max(1.0));
    let lo = match spec.model.lower() {
        LowerBoundary::Zero => (y - width).max(0.05 * y),
        LowerBoundary::NegInfinity => y - width,
    };
    let integrand = |z: f64| -> Result<f64> {
        let v = (result.beta - spec.cost.running_cost(z)) * spec.model.speed_density(z)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ModelEvaluation { what: "speed density", x: z })
        }
    };
    let inner = PiecewiseChebyshev::fit_adaptive(integrand, lo, y, 1e-14, 24, 1e-12 * width)?.antiderivative();

    Ok(ValueFunction {
        spec: spec.clone(),
        pair: pair.clone(),
        y_star: y,
        beta: result.beta,
        c,
        continuity_defect: defect,
        inner,
    })
}

/// One named, sampled check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Largest violation seen (scaled residual or sign margin).
    #[cfg_attr(feature = "serde", serde(deserialize_with = "crate::error::f64_or_nan"))]
    pub worst: f64,
    #[cfg_attr(feature = "serde", serde(deserialize_with = "crate::error::f64_or_nan"))]
    pub worst_at: f64,
    pub detail: String,
}

/// Grid checks of the variational equality.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariationalReport {
    pub tolerance: f64,
    pub checks: Vec<CheckOutcome>,
}

impl VariationalReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Worst {
    value: f64,
    at: f64,
    failures: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, at: f64::NAN, failures: 0 }
    }
    fn see(&mut self, x: f64, v: f64, fails: bool) {
        if fails {
            self.failures += 1;
        }
        if v.abs() > self.value.abs() || self.at.is_nan() {
            self.value = v;
            self.at = x;
        }
    }
}

/// Checks on `grid`:
/// (a) `W′ − γ` is negative below `y*` and positive above;
/// (b) `AW + π − β = 0` below `y*`;
/// (c) `(A − λ)W + π + λγ(x − y*) − β = 0` above `y*`;
/// (d) `W(x) − γx` is smallest at the grid point nearest `y*`;
/// (e) both one-sided `W″(y*±)` equal `(2/σ²)(β − π_μ(y*))` (relative).
///
/// Residuals in (b), (c) are divided by `max(1, |β|, |π(x)|)` and compared
/// with `tol`; second derivatives come from [`ValueFunction::second_derivative`].
pub fn variational_check(vf: &ValueFunction, grid: &[f64], tol: f64) -> VariationalReport {
    let spec = &vf.spec;
    let gamma = spec.gamma();
    let y = vf.y_star;

    let mut sign = Worst::new();
    let mut below = Worst::new();
    let mut above = Worst::new();
    let mut errors: Vec<String> = Vec::new();
    let mut level: Vec<(f64, f64)> = Vec::new();

    for &x in grid {
        let eval = || -> Result<(f64, f64, f64, f64)> {
            Ok((vf.evaluate(x)?, vf.derivative(x)?, vf.second_derivative(x)?, spec.model.checked_volatility(x)?))
        };
        let (w, dw, d2w, s) = match eval() {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("x = {x}: {e}"));
                continue;
            }
        };
        level.push((x, w - gamma * x));
        let margin = dw - gamma;
        if x < y {
            sign.see(x, margin, !(margin < 0.0));
        } else if x > y {
            sign.see(x, margin, !(margin > 0.0));
        }
        let pi = spec.cost.running_cost(x);
        let gen = 0.5 * s * s * d2w + spec.model.drift(x) * dw;
        let scale = 1f64.max(vf.beta.abs()).max(pi.abs());
        if x <= y {
            let r = (gen + pi - vf.beta) / scale;
            below.see(x, r, !(r.abs() <= tol));
        }
        if x >= y {
            let r = (gen - spec.lambda() * w + pi + spec.lambda() * gamma * (x - y) - vf.beta) / scale;
            above.see(x, r, !(r.abs() <= tol));
        }
    }

    let outcome = |name: &str, w: Worst, what: &str| CheckOutcome {
        name: name.into(),
        passed: w.failures == 0 && errors.is_empty(),
        worst: w.value,
        worst_at: w.at,
        detail: if errors.is_empty() {
            format!("{} of the sampled points violate {what}", w.failures)
        } else {
            format!("{} evaluation failures; first: {}", errors.len(), errors[0])
        },
    };

    let nearest = level.iter().min_by(|a, b| (a.0 - y).abs().total_cmp(&(b.0 - y).abs())).map(|p| p.0);
    let argmin = level.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0);
    let minimum = CheckOutcome {
        name: "global_minimum".into(),
        passed: errors.is_empty() && nearest.is_some() && nearest == argmin,
        worst: argmin.map_or(f64::NAN, |a| a - y),
        worst_at: argmin.unwrap_or(f64::NAN),
        detail: "W(x) − γx is minimized at the grid point nearest y*".into(),
    };

    let smooth = match (vf.second_derivatives_at_threshold(), vf.smooth_fit_target()) {
        (Ok((lo, hi)), Ok(t)) => {
            let scale = t.abs().max(f64::MIN_POSITIVE);
            let worst = ((lo - t) / scale).abs().max(((hi - t) / scale).abs());
            CheckOutcome {
                name: "smooth_fit".into(),
                passed: worst <= tol,
                worst,
                worst_at: y,
                detail: format!("W″(y*−) = {lo:e}, W″(y*+) = {hi:e}, (2/σ²)(β − π_μ(y*)) = {t:e}"),
            }
        }
        (Err(e), _) | (_, Err(e)) => CheckOutcome {
            name: "smooth_fit".into(),
            passed: false,
            worst: f64::NAN,
            worst_at: y,
            detail: format!("{e}"),
        },
    };

    VariationalReport {
        tolerance: tol,
        checks: alloc::vec![
            outcome("derivative_sign", sign, "W′ < γ below y* and W′ > γ above"),
            outcome("continuation_equation", below, "AW + π − β = 0"),
            outcome("action_equation", above, "(A − λ)W + π + λγ(x − y*) − β = 0"),
            minimum,
            smooth,
        ],
    }
}
