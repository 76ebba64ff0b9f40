//! Strict JSON run configuration and the built-in reference problems.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ergodic_core::interp::Pchip;
use ergodic_core::{CostModel, DiffusionModel, ProblemSpec, Tolerances};

use crate::simulate::SimConfig;
use crate::Error;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    pub model: ModelConfig,
    /// Solve with ODE-integrated fundamental solutions even when closed
    /// forms exist.
    #[serde(default)]
    pub numeric_fundamentals: bool,
    pub cost: CostConfig,
    /// Cost per unit of impulse; negative values are revenues.
    pub gamma: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Option<TolerancesConfig>,
    /// Search interval for the minimizer of `π_μ` when it is not given.
    #[serde(default)]
    pub minimizer_bracket: Option<[f64; 2]>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub validation: Option<ValidationConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `dX = μX(1 − bX)dt + σX dW` on `(0, ∞)`.
    VerhulstPearl { mu: f64, sigma: f64, b: f64 },
    /// `dX = −bX dt + dW` on ℝ.
    OrnsteinUhlenbeck { b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    /// `π(x) = |x|^p`.
    Power { p: f64 },
    /// `π(x) = |x|`.
    Absolute,
    /// Monotone cubic through `(x, pi)`; the minimizer of `π_μ` must be given.
    Table { x: Vec<f64>, pi: Vec<f64>, x_star: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default)]
    pub quad_tol: Option<f64>,
    #[serde(default)]
    pub root_tol: Option<f64>,
    #[serde(default)]
    pub tail_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub time_step: f64,
    pub horizon: f64,
    #[serde(default)]
    pub burn_in: Option<f64>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial_state: Option<f64>,
    /// Offsets from `y*` evaluated on common random numbers alongside `y*`.
    #[serde(default)]
    pub compare_offsets: Vec<f64>,
}

impl SimulationConfig {
    pub fn sim_config(&self, seed_override: Option<u64>) -> SimConfig {
        SimConfig {
            time_step: self.time_step,
            horizon: self.horizon,
            burn_in: self.burn_in,
            replicates: self.replicates,
            seed: seed_override.unwrap_or(self.seed),
            initial_state: self.initial_state,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// `[lo, hi]` of the variational-check grid; derived from the solve if absent.
    #[serde(default)]
    pub grid: Option<[f64; 2]>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn finite(field: &str, v: f64) -> Result<(), Error> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{field}: must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), Error> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{field}: must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Field-level checks beyond the schema.
    pub fn check(&self) -> Result<(), Error> {
        if self.spec_version != SPEC_VERSION {
            return Err(config_err(format!("spec_version: expected {SPEC_VERSION}, got {}", self.spec_version)));
        }
        match self.model {
            ModelConfig::VerhulstPearl { mu, sigma, b } => {
                positive("model.mu", mu)?;
                positive("model.sigma", sigma)?;
                positive("model.b", b)?;
            }
            ModelConfig::OrnsteinUhlenbeck { b } => positive("model.b", b)?,
        }
        match &self.cost {
            CostConfig::Power { p } => positive("cost.p", *p)?,
            CostConfig::Absolute => {}
            CostConfig::Table { x, pi, x_star } => {
                for (i, v) in x.iter().chain(pi).enumerate() {
                    finite(&format!("cost table entry {i}"), *v)?;
                }
                finite("cost.x_star", *x_star)?;
            }
        }
        finite("gamma", self.gamma)?;
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        if let Some(ls) = &self.lambdas {
            ergodic_core::threshold::check_lambda_grid(ls).map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(t) = &self.tolerances {
            for (name, v) in [("quad_tol", t.quad_tol), ("root_tol", t.root_tol), ("tail_tol", t.tail_tol)] {
                if let Some(v) = v {
                    positive(&format!("tolerances.{name}"), v)?;
                }
            }
        }
        if let Some([lo, hi]) = self.minimizer_bracket {
            finite("minimizer_bracket", lo)?;
            finite("minimizer_bracket", hi)?;
        }
        if let Some(s) = &self.simulation {
            s.sim_config(None).validate()?;
            for &d in &s.compare_offsets {
                finite("simulation.compare_offsets", d)?;
            }
        }
        if let Some(v) = &self.validation {
            if let Some([lo, hi]) = v.grid {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(config_err("validation.grid: need finite lo < hi"));
                }
            }
            if v.points.is_some_and(|n| n < 3) {
                return Err(config_err("validation.points: need at least 3"));
            }
            if let Some(t) = v.tolerance {
                positive("validation.tolerance", t)?;
            }
        }
        Ok(())
    }

    /// The single intensity of `solve`/`simulate`/`validate`.
    pub fn single_lambda(&self) -> Result<f64, Error> {
        match (self.lambda, &self.lambdas) {
            (Some(l), _) => Ok(l),
            (None, Some(ls)) if ls.len() == 1 => Ok(ls[0]),
            _ => Err(config_err("lambda: a single positive intensity is required")),
        }
    }

    /// The intensity grid of `sweep`.
    pub fn lambda_list(&self) -> Result<Vec<f64>, Error> {
        match (&self.lambdas, self.lambda) {
            (Some(ls), _) => Ok(ls.clone()),
            (None, Some(l)) => Ok(vec![l]),
            (None, None) => Err(config_err("lambdas: an intensity list is required")),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(c) = &self.tolerances {
            t.quad_tol = c.quad_tol.unwrap_or(t.quad_tol);
            t.root_tol = c.root_tol.unwrap_or(t.root_tol);
            t.tail_tol = c.tail_tol.unwrap_or(t.tail_tol);
        }
        t
    }

    pub fn model(&self) -> Result<DiffusionModel, Error> {
        let m = match self.model {
            ModelConfig::VerhulstPearl { mu, sigma, b } => DiffusionModel::verhulst_pearl(mu, sigma, b),
            ModelConfig::OrnsteinUhlenbeck { b } => DiffusionModel::ornstein_uhlenbeck(b),
        }
        .map_err(|e| config_err(format!("model: {e}")))?;
        Ok(if self.numeric_fundamentals { m.without_closed_form() } else { m })
    }

    pub fn cost(&self) -> Result<CostModel, Error> {
        let mut cost = match &self.cost {
            CostConfig::Power { p } => CostModel::power(*p, self.gamma),
            CostConfig::Absolute => CostModel::absolute(self.gamma),
            CostConfig::Table { x, pi, x_star } => {
                let table = Pchip::new(x.clone(), pi.clone()).map_err(|e| config_err(format!("cost: {e}")))?;
                CostModel::new(move |z| table.eval(z), self.gamma).with_minimizer(*x_star)
            }
        };
        if let Some([lo, hi]) = self.minimizer_bracket {
            cost = cost.with_minimizer_bracket(lo, hi);
        }
        Ok(cost)
    }

    /// Problem at intensity `lambda`; parameter errors are configuration errors.
    pub fn problem(&self, lambda: f64) -> Result<ProblemSpec, Error> {
        ProblemSpec::new(self.model()?, self.cost()?, lambda, self.tolerances()).map_err(|e| config_err(e.to_string()))
    }

    pub fn format(&self) -> Format {
        self.output.as_ref().and_then(|o| o.format).unwrap_or(Format::Both)
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.output.as_ref().and_then(|o| o.dir.as_deref())
    }
}

/// A built-in reference problem with its published thresholds.
#[derive(Debug, Clone)]
pub struct Reference {
    pub name: &'static str,
    pub config: RunConfig,
    pub lambdas: [f64; 5],
    pub published: [f64; 5],
    pub published_singular: f64,
}

pub const REFERENCE_NAMES: [&str; 2] = ["verhulst", "ou"];

/// Logistic growth (`μ = σ = 1`, `b = 0.01`) with `π = x²` and unit
/// harvesting revenue; and the OU process `dX = −X dt + dW` with `π = |x|`
/// and `γ = 0.1`.
pub fn reference(name: &str) -> Option<Reference> {
    let base = |model, cost, gamma, lambdas: [f64; 5]| RunConfig {
        spec_version: SPEC_VERSION,
        model,
        numeric_fundamentals: false,
        cost,
        gamma,
        lambda: None,
        lambdas: Some(lambdas.to_vec()),
        tolerances: None,
        minimizer_bracket: None,
        simulation: None,
        validation: None,
        output: None,
    };
    match name {
        "verhulst" => {
            let lambdas = [5.0, 10.0, 50.0, 100.0, 1000.0];
            Some(Reference {
                name: "verhulst",
                config: base(
                    ModelConfig::VerhulstPearl { mu: 1.0, sigma: 1.0, b: 0.01 },
                    CostConfig::Power { p: 2.0 },
                    -1.0,
                    lambdas,
                ),
                lambdas,
                published: [0.317, 0.496, 0.656, 0.684, 0.726],
                published_singular: 0.743,
            })
        }
        "ou" => {
            let lambdas = [1.0, 5.0, 10.0, 100.0, 300.0];
            Some(Reference {
                name: "ou",
                config: base(ModelConfig::OrnsteinUhlenbeck { b: 1.0 }, CostConfig::Absolute, 0.1, lambdas),
                lambdas,
                published: [0.182, 0.301, 0.353, 0.469, 0.496],
                published_singular: 0.535,
            })
        }
        _ => None,
    }
}
