use alloc::string::String;
use core::fmt;

/// Errors raised by the numeric kernels and the threshold solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Drift, volatility or cost evaluated to a non-finite value.
    ModelEvaluation { what: &'static str, x: f64 },
    /// Adaptive quadrature did not reach the requested tolerance.
    Quadrature { a: f64, b: f64, estimate: f64, error: f64 },
    /// Progressive tail truncation never saw the integrand decay.
    TailDivergence { a: f64, estimate: f64 },
    /// An integral required by the standing assumptions diverges.
    AssumptionViolation(String),
    /// Series or integral representation of a special function failed.
    SpecialFunction { name: &'static str, detail: String },
    /// The fundamental solutions could not be constructed.
    FundamentalSolution(String),
    /// No sign change found while expanding a bracket.
    Bracketing { what: &'static str, samples: alloc::vec::Vec<(f64, f64)> },
    /// Root finder failed to converge or was handed an invalid bracket.
    Solver(String),
    /// Invalid input parameter.
    InvalidParameter { name: &'static str, detail: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ModelEvaluation { what, x } => {
                write!(f, "model evaluation failed: {what} is not finite at x = {x}")
            }
            Error::Quadrature { a, b, estimate, error } => {
                write!(f, "quadrature did not converge on [{a}, {b}]: estimate {estimate}, error {error}")
            }
            Error::TailDivergence { a, estimate } => {
                write!(f, "tail integral from {a} shows no decay (last estimate {estimate}); divergence suspected")
            }
            Error::AssumptionViolation(msg) => write!(f, "assumption violated: {msg}"),
            Error::SpecialFunction { name, detail } => write!(f, "{name}: {detail}"),
            Error::FundamentalSolution(msg) => write!(f, "fundamental solutions: {msg}"),
            Error::Bracketing { what, samples } => {
                write!(f, "no sign change found for {what}; sampled")?;
                for (x, v) in samples.iter().take(8) {
                    write!(f, " ({x:.6}, {v:.3e})")?;
                }
                Ok(())
            }
            Error::Solver(msg) => write!(f, "solver: {msg}"),
            Error::InvalidParameter { name, detail } => write!(f, "invalid {name}: {detail}"),
        }
    }
}

impl core::error::Error for Error {}

/// Reads a float written as `null` (non-finite) back as NaN.
#[cfg(feature = "serde")]
pub fn f64_or_nan<'de, D: serde::Deserializer<'de>>(d: D) -> core::result::Result<f64, D::Error> {
    use serde::Deserialize;
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}
