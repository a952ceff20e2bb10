//! Minimal d-dimensional complex FFT on row-major data, built on rustfft.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub(crate) struct NdFft {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl NdFft {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        NdFft {
            dims: dims.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn forward(&self, data: &mut [Complex<f64>]) {
        for axis in 0..self.dims.len() {
            self.axis_transform(data, axis, false);
        }
    }

    /// Inverse transform, normalized by 1/len.
    pub fn inverse(&self, data: &mut [Complex<f64>]) {
        for axis in 0..self.dims.len() {
            self.axis_transform(data, axis, true);
        }
        let scale = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn axis_transform(&self, data: &mut [Complex<f64>], axis: usize, inv: bool) {
        let n = self.dims[axis];
        let stride: usize = self.dims[axis + 1..].iter().product();
        let block = n * stride;
        let total = self.len();
        debug_assert_eq!(data.len(), total);
        let plan = if inv {
            &self.inverse[axis]
        } else {
            &self.forward[axis]
        };
        let mut line = vec![Complex::default(); n];
        let mut base = 0;
        while base < total {
            for off in 0..stride {
                let start = base + off;
                for t in 0..n {
                    line[t] = data[start + t * stride];
                }
                plan.process(&mut line);
                for t in 0..n {
                    data[start + t * stride] = line[t];
                }
            }
            base += block;
        }
    }
}
