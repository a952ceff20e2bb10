//! JSON problem configuration for the CLI.

use crate::CliError;
use fracsinc_core::{DomainShape, RhsSpec, ScalarFn, SolveConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub d: usize,
    pub s: f64,
    pub n_list: Vec<usize>,
    pub shape: ShapeConfig,
    pub rhs: RhsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_oversample")]
    pub oversample: u32,
    #[serde(default)]
    pub kernel_cache_dir: Option<PathBuf>,
    /// "ball-exact" compares against the closed-form ball solution,
    /// "self" against the finest run restricted to coarser grids. Defaults
    /// to ball-exact when the shape is a ball and f is "one".
    #[serde(default)]
    pub reference: Option<ReferenceMode>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_oversample() -> u32 {
    fracsinc_core::DEFAULT_OVERSAMPLE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeConfig {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    BallExact,
    SelfConvergence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsConfig {
    pub mode: RhsModeConfig,
    /// Built-in right-hand side: "one" or "linear-x1".
    pub f: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum RhsModeConfig {
    Direct,
    Mollified,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default = "default_true")]
    pub precondition: bool,
    #[serde(default)]
    pub record_history: bool,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_true() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_iter: None,
            precondition: true,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: ProblemConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_list.is_empty() {
            return Err(CliError::Usage("n_list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("n_list must be strictly increasing".into()));
        }
        if self.shape_dim() != self.d {
            return Err(CliError::Usage(format!(
                "shape dimension {} does not match d = {}",
                self.shape_dim(),
                self.d
            )));
        }
        builtin_rhs(&self.rhs.f)?;
        Ok(())
    }

    fn shape_dim(&self) -> usize {
        match &self.shape {
            ShapeConfig::Ball { center, .. } => center.len(),
            ShapeConfig::Box { lo, .. } => lo.len(),
            ShapeConfig::Polygon { .. } => 2,
        }
    }

    pub fn domain_shape(&self) -> DomainShape {
        match &self.shape {
            ShapeConfig::Ball { center, radius } => DomainShape::ball(center.clone(), *radius),
            ShapeConfig::Box { lo, hi } => DomainShape::cuboid(lo.clone(), hi.clone()),
            ShapeConfig::Polygon { vertices } => DomainShape::polygon(vertices.clone()),
        }
    }

    pub fn rhs_spec(&self) -> Result<RhsSpec, CliError> {
        let f = builtin_rhs(&self.rhs.f)?;
        Ok(match self.rhs.mode {
            RhsModeConfig::Direct => RhsSpec::direct(f),
            RhsModeConfig::Mollified => RhsSpec::mollified(f, self.rhs.epsilon, self.rhs.rho),
        })
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            precondition: self.solver.precondition,
            record_history: self.solver.record_history,
        }
    }

    /// Whether the closed-form ball comparison applies.
    pub fn reference_mode(&self) -> ReferenceMode {
        if let Some(mode) = self.reference {
            return mode;
        }
        let is_ball = matches!(self.shape, ShapeConfig::Ball { .. });
        if is_ball && self.rhs.f == "one" {
            ReferenceMode::BallExact
        } else {
            ReferenceMode::SelfConvergence
        }
    }
}

/// Named right-hand sides available from JSON configs. Custom callbacks are
/// library-only.
pub fn builtin_rhs(name: &str) -> Result<ScalarFn, CliError> {
    match name {
        "one" => Ok(Arc::new(|_: &[f64]| 1.0)),
        "linear-x1" => Ok(Arc::new(|x: &[f64]| x[0])),
        other => Err(CliError::Usage(format!(
            "unknown rhs builtin {other:?}; available: one, linear-x1"
        ))),
    }
}
