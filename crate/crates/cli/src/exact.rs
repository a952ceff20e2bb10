//! Closed-form solution of (-Delta)^s u = 1 on a ball: the desk-scale ground
//! truth for convergence studies.

use statrs::function::gamma::gamma;

/// u(x) = A (R^2 - |x-c|^2)^s inside the ball, 0 outside, with
/// A = Gamma(d/2) / (2^{2s} Gamma(d/2 + s) Gamma(1 + s)).
#[derive(Debug, Clone)]
pub struct BallExactSolution {
    center: Vec<f64>,
    radius: f64,
    s: f64,
    amplitude: f64,
}

impl BallExactSolution {
    pub fn new(center: Vec<f64>, radius: f64, s: f64) -> Self {
        let d = center.len() as f64;
        let amplitude = gamma(d / 2.0) / (2f64.powf(2.0 * s) * gamma(d / 2.0 + s) * gamma(1.0 + s));
        BallExactSolution {
            center,
            radius,
            s,
            amplitude,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for (xi, ci) in x.iter().zip(&self.center) {
            r2 += (xi - ci) * (xi - ci);
        }
        let gap = self.radius * self.radius - r2;
        if gap > 0.0 {
            self.amplitude * gap.powf(self.s)
        } else {
            0.0
        }
    }
}
