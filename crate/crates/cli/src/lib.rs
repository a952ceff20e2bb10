//! Library side of the `fracsinc` command-line tool: JSON problem configs,
//! the closed-form ball reference solution, and the convergence harness.

pub mod config;
pub mod convergence;
pub mod exact;

pub use config::{
    builtin_rhs, OutputConfig, ProblemConfig, ReferenceMode, RhsConfig, RhsModeConfig,
    ShapeConfig, SolverConfig,
};
pub use convergence::{kernel_for, run_convergence, ColumnFit, ConvergenceOutcome};
pub use exact::BallExactSolution;

use thiserror::Error;

/// CLI failures map to exit codes: usage errors exit 1, numerical failures
/// exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}
