//! Command layer of the `jcm` binary: configuration, the four subcommands and
//! CSV/JSON emission.
//!
//! Exit statuses: 0 success, 1 oracle check failed, 2 configuration or output
//! error, 3 ill-conditioned probe design, 4 truncation or domain error.

pub mod commands;
pub mod config;
pub mod emit;

use thiserror::Error;

pub use commands::{cmd_criteria, cmd_measure, cmd_oracle_check, cmd_pfunc, Outcome};
pub use config::{MethodChoice, RunConfig, Shots};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numerical(#[from] jcm_core::Error),
    #[error("oracle check failed: max trace distance {max_distance:e} exceeds {threshold:e}")]
    OracleFailed { max_distance: f64, threshold: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use jcm_core::Error as E;
        match self {
            CliError::OracleFailed { .. } => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(e) => match e {
                E::InvalidParameter(_) => 2,
                E::IllConditionedDesign { .. } => 3,
                E::Truncation(_) | E::Domain(_) | E::StencilOutOfDomain { .. } | E::UndefinedForVacuum(_) => 4,
            },
        }
    }
}
