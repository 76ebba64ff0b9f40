//! Diffusion and cost models, their scale and speed densities, and the
//! problem specification consumed by the solver.

use alloc::format;
use alloc::sync::Arc;
use core::fmt;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Integrand, Tolerances};
use crate::roots::golden_section;

/// A real function of the state, shareable across threads.
pub type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Left end of the state space; the right end is always `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LowerBoundary {
    Zero,
    NegInfinity,
}

impl LowerBoundary {
    pub fn value(self) -> f64 {
        match self {
            LowerBoundary::Zero => 0.0,
            LowerBoundary::NegInfinity => f64::NEG_INFINITY,
        }
    }

    /// Scale-density anchor: 1 on the half line, 0 on the real line.
    pub fn default_anchor(self) -> f64 {
        match self {
            LowerBoundary::Zero => 1.0,
            LowerBoundary::NegInfinity => 0.0,
        }
    }
}

/// Models with known scale density and fundamental solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "snake_case"))]
pub enum ClosedForm {
    None,
    /// `dX = μX(1 − bX)dt + σX dW` on `(0, ∞)`.
    VerhulstPearl {
        mu: f64,
        sigma: f64,
        b: f64,
    },
    /// `dX = −bX dt + dW` on `ℝ`.
    OrnsteinUhlenbeck {
        b: f64,
    },
}

/// A regular one-dimensional diffusion `dX = μ(X)dt + σ(X)dW`.
#[derive(Clone)]
pub struct DiffusionModel {
    drift: StateFn,
    volatility: StateFn,
    lower: LowerBoundary,
    scale_anchor: f64,
    closed_form: ClosedForm,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("lower", &self.lower)
            .field("scale_anchor", &self.scale_anchor)
            .field("closed_form", &self.closed_form)
            .finish_non_exhaustive()
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, detail: format!("must be positive and finite, got {v}") })
    }
}

impl DiffusionModel {
    /// A model without closed forms; everything is computed numerically.
    pub fn new<D, V>(drift: D, volatility: V, lower: LowerBoundary) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        V: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DiffusionModel {
            drift: Arc::new(drift),
            volatility: Arc::new(volatility),
            lower,
            scale_anchor: lower.default_anchor(),
            closed_form: ClosedForm::None,
        }
    }

    pub fn verhulst_pearl(mu: f64, sigma: f64, b: f64) -> Result<Self> {
        positive("mu", mu)?;
        positive("sigma", sigma)?;
        positive("b", b)?;
        let mut m = DiffusionModel::new(move |x| mu * x * (1.0 - b * x), move |x| sigma * x, LowerBoundary::Zero);
        m.closed_form = ClosedForm::VerhulstPearl { mu, sigma, b };
        Ok(m)
    }

    pub fn ornstein_uhlenbeck(b: f64) -> Result<Self> {
        positive("b", b)?;
        let mut m = DiffusionModel::new(move |x| -b * x, |_| 1.0, LowerBoundary::NegInfinity);
        m.closed_form = ClosedForm::OrnsteinUhlenbeck { b };
        Ok(m)
    }

    /// Same dynamics with the closed-form tag dropped, forcing numeric routes.
    pub fn without_closed_form(&self) -> Self {
        DiffusionModel { closed_form: ClosedForm::None, ..self.clone() }
    }

    pub fn with_scale_anchor(mut self, anchor: f64) -> Result<Self> {
        if !self.is_interior(anchor) {
            return Err(Error::InvalidParameter {
                name: "scale_anchor",
                detail: format!("{anchor} is not interior to the state space"),
            });
        }
        self.scale_anchor = anchor;
        Ok(self)
    }

    pub fn lower(&self) -> LowerBoundary {
        self.lower
    }

    pub fn scale_anchor(&self) -> f64 {
        self.scale_anchor
    }

    pub fn closed_form(&self) -> ClosedForm {
        self.closed_form
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn volatility(&self, x: f64) -> f64 {
        (self.volatility)(x)
    }

    pub fn is_interior(&self, x: f64) -> bool {
        x.is_finite() && x > self.lower.value()
    }

    /// `2μ(x)/σ²(x)`, checked for finiteness and a positive volatility.
    pub fn drift_ratio(&self, x: f64) -> Result<f64> {
        let s = self.checked_volatility(x)?;
        let mu = self.drift(x);
        if !mu.is_finite() {
            return Err(Error::ModelEvaluation { what: "drift", x });
        }
        Ok(2.0 * mu / (s * s))
    }

    pub fn checked_volatility(&self, x: f64) -> Result<f64> {
        let s = self.volatility(x);
        if s.is_finite() && s > 0.0 {
            Ok(s)
        } else {
            Err(Error::ModelEvaluation { what: "volatility", x })
        }
    }

    /// `ln S′(x) = −∫_{x₀}^{x} 2μ/σ²`.
    pub fn ln_scale_density(&self, x: f64) -> Result<f64> {
        let x0 = self.scale_anchor;
        match self.closed_form {
            ClosedForm::VerhulstPearl { mu, sigma, b } => {
                let p = 2.0 * mu / (sigma * sigma);
                let c = p * b;
                if x <= 0.0 {
                    return Err(Error::ModelEvaluation { what: "scale density", x });
                }
                Ok(-p * (x / x0).ln() + c * (x - x0))
            }
            ClosedForm::OrnsteinUhlenbeck { b } => Ok(b * (x * x - x0 * x0)),
            ClosedForm::None => {
                let mut failure = None;
                let mut ratio = |z: f64| match self.drift_ratio(z) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                };
                // On the half line integrate in ln z: drift ratios typically
                // behave like 1/z at the origin.
                let v = if self.lower == LowerBoundary::Zero && x > 0.0 {
                    integrate(
                        Integrand::new(|t: f64| {
                            let z = t.exp();
                            ratio(z) * z
                        }),
                        x0.ln(),
                        x.ln(),
                        1e-13,
                    )
                } else {
                    integrate(Integrand::new(ratio), x0, x, 1e-13)
                };
                if let Some(e) = failure {
                    return Err(e);
                }
                v.map(|v| -v).map_err(|e| match e {
                    Error::ModelEvaluation { .. } => Error::ModelEvaluation { what: "scale density", x },
                    other => other,
                })
            }
        }
    }

    pub fn scale_density(&self, x: f64) -> Result<f64> {
        self.ln_scale_density(x).map(f64::exp)
    }

    /// `ln m′(x) = ln 2 − 2 ln σ(x) − ln S′(x)`.
    pub fn ln_speed_density(&self, x: f64) -> Result<f64> {
        let s = self.checked_volatility(x)?;
        Ok(core::f64::consts::LN_2 - 2.0 * s.ln() - self.ln_scale_density(x)?)
    }

    pub fn speed_density(&self, x: f64) -> Result<f64> {
        self.ln_speed_density(x).map(f64::exp)
    }
}

/// Running cost π, proportional control cost γ, and the minimizer of π_μ.
///
/// `γ` is signed: a negative value is a unit revenue for every unit removed
/// (harvesting), which is what makes `π_μ = x² − x(1 − bx)` arise from
/// `π = x²` under logistic growth.
#[derive(Clone)]
pub struct CostModel {
    running_cost: StateFn,
    pub unit_control_cost: f64,
    pub pi_mu_minimizer: Option<f64>,
    /// Search interval for `x*` when it is not supplied.
    pub minimizer_bracket: Option<(f64, f64)>,
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostModel")
            .field("unit_control_cost", &self.unit_control_cost)
            .field("pi_mu_minimizer", &self.pi_mu_minimizer)
            .finish_non_exhaustive()
    }
}

impl CostModel {
    pub fn new<P>(running_cost: P, unit_control_cost: f64) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CostModel {
            running_cost: Arc::new(running_cost),
            unit_control_cost,
            pi_mu_minimizer: None,
            minimizer_bracket: None,
        }
    }

    /// `π(x) = |x|^p`.
    pub fn power(p: f64, unit_control_cost: f64) -> Self {
        CostModel::new(move |x: f64| x.abs().powf(p), unit_control_cost)
    }

    /// `π(x) = |x|`.
    pub fn absolute(unit_control_cost: f64) -> Self {
        CostModel::new(f64::abs, unit_control_cost)
    }

    pub fn with_minimizer(mut self, x_star: f64) -> Self {
        self.pi_mu_minimizer = Some(x_star);
        self
    }

    pub fn with_minimizer_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.minimizer_bracket = Some((lo, hi));
        self
    }

    pub fn running_cost(&self, x: f64) -> f64 {
        (self.running_cost)(x)
    }
}

/// A complete control problem: dynamics, costs, signal intensity, tolerances.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub model: DiffusionModel,
    pub cost: CostModel,
    pub intensity: f64,
    pub tolerances: Tolerances,
    x_star: f64,
}

impl ProblemSpec {
    /// Validates `λ`, `γ` and the tolerances, and resolves `x*`.
    pub fn new(model: DiffusionModel, cost: CostModel, intensity: f64, tolerances: Tolerances) -> Result<Self> {
        positive("intensity", intensity)?;
        if !cost.unit_control_cost.is_finite() {
            return Err(Error::InvalidParameter {
                name: "unit_control_cost",
                detail: format!("must be finite, got {}", cost.unit_control_cost),
            });
        }
        tolerances.validate()?;
        let mut spec = ProblemSpec { model, cost, intensity, tolerances, x_star: f64::NAN };
        spec.x_star = match spec.cost.pi_mu_minimizer {
            Some(x) if spec.model.is_interior(x) => x,
            Some(x) => {
                return Err(Error::InvalidParameter {
                    name: "pi_mu_minimizer",
                    detail: format!("{x} is not interior to the state space"),
                })
            }
            None => spec.locate_minimizer()?,
        };
        Ok(spec)
    }

    /// The same problem at another signal intensity.
    pub fn with_intensity(&self, intensity: f64) -> Result<Self> {
        positive("intensity", intensity)?;
        Ok(ProblemSpec { intensity, ..self.clone() })
    }

    pub fn lambda(&self) -> f64 {
        self.intensity
    }

    pub fn gamma(&self) -> f64 {
        self.cost.unit_control_cost
    }

    pub fn lower(&self) -> f64 {
        self.model.lower().value()
    }

    /// Interior minimizer of `π_μ`.
    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// `π_μ(x) = π(x) + γμ(x)`.
    pub fn pi_mu(&self, x: f64) -> f64 {
        self.cost.running_cost(x) + self.gamma() * self.model.drift(x)
    }

    /// `π_γ(x) = π(x) + γλx`.
    pub fn pi_gamma(&self, x: f64) -> f64 {
        self.cost.running_cost(x) + self.gamma() * self.intensity * x
    }

    fn locate_minimizer(&self) -> Result<f64> {
        let (lo, hi) = self.cost.minimizer_bracket.unwrap_or(match self.model.lower() {
            LowerBoundary::Zero => (1e-9, 1e3),
            LowerBoundary::NegInfinity => (-1e3, 1e3),
        });
        if !(self.model.is_interior(lo) && self.model.is_interior(hi) && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "minimizer_bracket",
                detail: format!("[{lo}, {hi}] is not an interior interval"),
            });
        }
        let x = golden_section(
            |x| {
                let v = self.pi_mu(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::ModelEvaluation { what: "pi_mu", x })
                }
            },
            lo,
            hi,
            1e-12,
        )?;
        if !self.model.is_interior(x) {
            return Err(Error::AssumptionViolation(format!("minimizer of pi_mu located at the boundary ({x})")));
        }
        if (x - lo).min(hi - x) <= 1e-6 * (hi - lo) {
            return Err(Error::AssumptionViolation(format!(
                "pi_mu has no minimizer inside [{lo}, {hi}] (search ended at {x}); set a minimizer bracket"
            )));
        }
        Ok(x)
    }
}
