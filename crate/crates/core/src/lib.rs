//! Solver library for the homogeneous fractional Dirichlet problem
//! (-Delta)^s u = f on a bounded region of the unit box, discretized in a
//! sinc basis on a uniform lattice.
//!
//! The discrete operator is a lattice convolution whose entries are Fourier
//! coefficients of |omega|^{2s}; applications run at FFT speed through a
//! circulant embedding, and masked systems are solved by projected
//! conjugate gradients with a periodic-symbol preconditioner. Right-hand
//! sides come either from direct sampling or from an
//! extend-then-mollify pipeline whose mollifier spectrum vanishes on the
//! dual lattice.

pub mod error;
pub mod field;
mod fft;
pub mod kernel;
pub mod lattice;
pub mod norms;
pub mod operator;
pub mod quadrature;
pub mod rhs;
pub mod solver;

pub use error::{Error, Result};
pub use field::CoefficientField;
pub use kernel::{
    assemble_kernel, kernel_entry_oracle, kernel_load, kernel_save, FracOrder, SpectralKernel,
    DEFAULT_OVERSAMPLE,
};
pub use lattice::{
    build_mask, enlarge_shape, shape_contains, strip_point_count, DomainMask, DomainShape,
    Lattice,
};
pub use norms::{
    discrete_l2, energy_norm, error_report, fit_rate, fit_rate_log_corrected, ErrorReport,
    RateFit,
};
pub use operator::{
    apply_dense_oracle, apply_full, apply_masked, precond_apply, MaskedOperator,
    PeriodicPreconditioner,
};
pub use rhs::{
    build_mollifier, build_rhs, cube_spectrum_factor, mollify_sample, point_eval,
    point_eval_windowed, sample_direct, sinc_interpolate, Extension, MollifierSpec, RhsMode,
    RhsSpec, ScalarFn, TabulatedMollifier,
};
pub use solver::{solve, solve_dense_oracle, SolveConfig, SolveReport};
