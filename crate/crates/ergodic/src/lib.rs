//! Std companion to `ergodic-core`: Monte Carlo validation of threshold
//! policies, JSON run configurations, artifact writers and the `ergodic` CLI.

pub mod commands;
pub mod config;
pub mod output;
pub mod simulate;

pub use config::RunConfig;
pub use simulate::{compare_policies, estimate_beta, simulate_policy, PolicySpec, SimConfig, SimReport};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] ergodic_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(ergodic_core::Error::InvalidParameter { .. }) => EXIT_CONFIG,
            Error::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}
