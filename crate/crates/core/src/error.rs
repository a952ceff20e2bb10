//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("dimension mismatch: shape is {shape}-d, lattice is {lattice}-d")]
    DimensionMismatch { shape: usize, lattice: usize },
    #[error("empty discrete domain")]
    EmptyDiscreteDomain,
    #[error("enlarged domain exceeds bounding box")]
    EnlargedDomainExceedsBox,
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid fractional order: s = {0} is outside (0, 1)")]
    InvalidFractionalOrder(f64),
    #[error("invalid oversample factor {0}: need a power of two >= 4")]
    InvalidOversample(u32),
    #[error("oracle tolerance {0:e} outside [1e-12, 1e-4]")]
    InvalidOracleTolerance(f64),
    #[error("oracle index out of range: |m_i| must be <= {limit}")]
    OracleIndexOutOfRange { limit: i64 },
    #[error("oracle quadrature failed: achieved error estimate {achieved:e} above target {target:e}")]
    OracleQuadratureFailed { achieved: f64, target: f64 },
    #[error("kernel too large: estimated {estimated} bytes exceeds cap {cap}")]
    KernelTooLarge { estimated: usize, cap: usize },
    #[error("kernel file header malformed: {0}")]
    MalformedHeader(String),
    #[error("kernel file magic mismatch")]
    MagicMismatch,
    #[error("kernel file truncated: expected {expected} payload bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("kernel file checksum mismatch")]
    ChecksumMismatch,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("convolution integrity: imaginary residue {residue:e} above threshold")]
    ConvolutionIntegrity { residue: f64 },
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("matrix not SPD")]
    MatrixNotSpd,
    #[error("kernel not PSD: energy radicand {radicand:e}")]
    KernelNotPsd { radicand: f64 },
    #[error("non-finite sample at lattice index {index:?}")]
    NonFiniteSample { index: Vec<usize> },
    #[error("invalid mollifier spec: {0}")]
    InvalidMollifier(String),
    #[error("mollifier normalization degenerate")]
    DegenerateMollifier,
    #[error("extension insufficient; increase rho")]
    ExtensionInsufficient,
    #[error("invalid solve config: {0}")]
    InvalidSolveConfig(String),
    #[error(
        "max iterations reached: {iterations} iterations, relative residual {relative_residual:e}"
    )]
    MaxIterations {
        iterations: usize,
        relative_residual: f64,
        best: Box<crate::field::CoefficientField>,
        report: Box<crate::solver::SolveReport>,
    },
    #[error("invalid error sequence: {0}")]
    InvalidErrorSequence(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
