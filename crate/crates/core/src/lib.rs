//! Threshold policies for ergodic impulse control of one-dimensional
//! diffusions when interventions are only allowed at the arrival times of an
//! independent Poisson process.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; the function handles stored in models and
//! fundamental solutions are `Send + Sync` and can be shared across threads.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fundamental;
pub mod interp;
pub mod measure;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod threshold;
pub mod validate;
pub mod value;

pub use error::{Error, Result};
pub use fundamental::{build_pair, ode_pair, FundamentalPair, Provenance};
pub use model::{ClosedForm, CostModel, DiffusionModel, LowerBoundary, ProblemSpec, StateFn};
pub use quadrature::Tolerances;
pub use threshold::{lambda_sweep, solve, solve_threshold, SolveResult, SweepEntry};
pub use validate::{validate_assumptions, ValidationReport};
pub use value::{build_value_function, variational_check, CheckOutcome, ValueFunction, VariationalReport};
