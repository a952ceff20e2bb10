//! Projected conjugate gradients on the masked subspace, with the periodic
//! symbol as an optional preconditioner, and a dense direct oracle.

use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::lattice::MAX_DIM;
use crate::operator::{apply_masked, zero_exterior, MaskedOperator, PeriodicPreconditioner};
use nalgebra::DMatrix;
use std::time::{Duration, Instant};

/// Guard for the dense direct solve.
pub const DENSE_SOLVE_GUARD: usize = 2048;

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Relative residual target, measured unpreconditioned on the mask.
    pub tol: f64,
    /// Iteration cap; defaults to 10 N.
    pub max_iter: Option<usize>,
    pub precondition: bool,
    pub record_history: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iter: None,
            precondition: true,
            record_history: false,
        }
    }
}

impl SolveConfig {
    fn validate(&self, n: usize) -> Result<usize> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::InvalidSolveConfig(format!(
                "tol {} outside (0, 1e-2]",
                self.tol
            )));
        }
        let max_iter = self.max_iter.unwrap_or(10 * n);
        if max_iter == 0 {
            return Err(Error::InvalidSolveConfig("max_iter must be >= 1".into()));
        }
        Ok(max_iter)
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    /// Residual norms sqrt(<r, z>) in the preconditioned inner product, one
    /// entry per iteration including the initial residual.
    pub residual_history: Option<Vec<f64>>,
    pub wall_time: Duration,
}

/// Solve S Phi S^T u = f by projected (preconditioned) conjugate gradients.
/// Exterior entries of the right-hand side are zeroed; every iterate keeps
/// them exactly zero.
pub fn solve(
    op: &MaskedOperator,
    rhs: &CoefficientField,
    cfg: &SolveConfig,
) -> Result<(CoefficientField, SolveReport)> {
    let lattice = op.lattice();
    if rhs.lattice() != lattice {
        return Err(Error::ShapeMismatch("rhs lattice".into()));
    }
    let max_iter = cfg.validate(lattice.n())?;
    let start = Instant::now();

    let mask = op.mask().clone();
    let mut r = rhs.clone();
    zero_exterior(&mut r, &mask);
    let rhs_norm = r.norm_l2();
    let mut history = if cfg.record_history {
        Some(Vec::new())
    } else {
        None
    };

    let mut x = CoefficientField::zeros(lattice);
    if rhs_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                residual_history: history,
                wall_time: start.elapsed(),
            },
        ));
    }

    let precond = cfg
        .precondition
        .then(|| PeriodicPreconditioner::new(lattice, op.kernel().s()));
    let apply_precond = |r: &CoefficientField| -> Result<CoefficientField> {
        match &precond {
            Some(p) => {
                let mut z = p.apply_inverse(r)?;
                zero_exterior(&mut z, &mask);
                Ok(z)
            }
            None => Ok(r.clone()),
        }
    };

    let mut z = apply_precond(&r)?;
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    if let Some(h) = history.as_mut() {
        h.push(rz.max(0.0).sqrt());
    }

    let mut rel = 1.0;
    for it in 1..=max_iter {
        let ap = apply_masked(op, &p)?;
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::MatrixNotSpd);
        }
        let alpha = rz / pap;
        for (xi, pi) in x.data_mut().iter_mut().zip(p.data()) {
            *xi += alpha * pi;
        }
        for (ri, api) in r.data_mut().iter_mut().zip(ap.data()) {
            *ri -= alpha * api;
        }
        rel = r.norm_l2() / rhs_norm;
        z = apply_precond(&r)?;
        let rz_new = r.dot(&z);
        if let Some(h) = history.as_mut() {
            h.push(rz_new.max(0.0).sqrt());
        }
        if rel <= cfg.tol {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    final_relative_residual: rel,
                    residual_history: history,
                    wall_time: start.elapsed(),
                },
            ));
        }
        let beta = rz_new / rz;
        for (pi, zi) in p.data_mut().iter_mut().zip(z.data()) {
            *pi = zi + beta * *pi;
        }
        rz = rz_new;
    }

    let report = SolveReport {
        iterations: max_iter,
        final_relative_residual: rel,
        residual_history: history,
        wall_time: start.elapsed(),
    };
    Err(Error::MaxIterations {
        iterations: max_iter,
        relative_residual: rel,
        best: Box::new(x),
        report: Box::new(report),
    })
}

/// Assemble the masked matrix explicitly and solve by Cholesky factorization.
pub fn solve_dense_oracle(
    op: &MaskedOperator,
    rhs: &CoefficientField,
) -> Result<CoefficientField> {
    let lattice = op.lattice();
    if rhs.lattice() != lattice {
        return Err(Error::ShapeMismatch("rhs lattice".into()));
    }
    let mask = op.mask();
    let count = mask.count();
    if count > DENSE_SOLVE_GUARD {
        return Err(Error::SizeGuard(format!(
            "dense solve needs mask count <= {DENSE_SOLVE_GUARD}, got {count}"
        )));
    }
    let kernel = op.kernel();
    let d = lattice.d();
    let indices = mask.indices();
    let mut ai = [0usize; MAX_DIM];
    let mut bi = [0usize; MAX_DIM];
    let mut m = [0i64; MAX_DIM];
    let scale = kernel.scale();
    let mat = DMatrix::from_fn(count, count, |a, b| {
        lattice.decode(indices[a], &mut ai);
        lattice.decode(indices[b], &mut bi);
        for axis in 0..d {
            m[axis] = ai[axis] as i64 - bi[axis] as i64;
        }
        scale * kernel.base_entry(&m[..d])
    });
    let b = nalgebra::DVector::from_iterator(
        count,
        indices.iter().map(|&lin| rhs.data()[lin]),
    );
    let chol = mat.cholesky().ok_or(Error::MatrixNotSpd)?;
    let sol = chol.solve(&b);
    let mut out = CoefficientField::zeros(lattice);
    for (slot, &lin) in sol.iter().zip(indices) {
        out.data_mut()[lin] = *slot;
    }
    Ok(out)
}
