//! Real coefficient fields on the lattice (the vectors v of v_h).

use crate::error::{Error, Result};
use crate::lattice::{Lattice, MAX_DIM};

/// Coefficients v_k over {0,..,N-1}^d in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    lattice: Lattice,
    data: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(lattice: Lattice) -> Self {
        CoefficientField {
            lattice,
            data: vec![0.0; lattice.num_points()],
        }
    }

    pub fn from_vec(lattice: Lattice, data: Vec<f64>) -> Result<Self> {
        if data.len() != lattice.num_points() {
            return Err(Error::ShapeMismatch(format!(
                "field length {} does not match lattice {}^{}",
                data.len(),
                lattice.n(),
                lattice.d()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let mut idx = [0usize; MAX_DIM];
            lattice.decode(pos, &mut idx);
            return Err(Error::NonFiniteSample {
                index: idx[..lattice.d()].to_vec(),
            });
        }
        Ok(CoefficientField { lattice, data })
    }

    /// Evaluate `f` at every lattice point.
    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(lattice.num_points());
        let mut x = [0.0f64; MAX_DIM];
        for lin in 0..lattice.num_points() {
            lattice.point(lin, &mut x);
            data.push(f(&x[..lattice.d()]));
        }
        Self::from_vec(lattice, data)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn dot(&self, other: &CoefficientField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Plain Euclidean norm of the coefficient vector.
    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
