//! Gauss-Legendre rules and a small adaptive panel integrator.
//!
//! The adaptive integrator is the ground-truth path for kernel entries: it
//! shares nothing with the assembly mesh except the node generator below.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on (-1, 1), computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive panel integration on [a, b] with a 15-point Gauss rule per panel
/// and bisection driven by the whole-vs-halves discrepancy.
pub struct AdaptivePanels {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Panel budget per call; exhausting it is an error.
    pub max_panels: usize,
}

impl Default for AdaptivePanels {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptivePanels {
    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre(15);
        AdaptivePanels {
            nodes,
            weights,
            max_panels: 400_000,
        }
    }

    fn panel<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let rad = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + rad * x);
        }
        acc * rad
    }

    /// Integrate f over [a, b] to absolute accuracy `abs_tol`, starting from
    /// `init_panels` equal panels. Returns the value and an error estimate.
    pub fn integrate<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        abs_tol: f64,
        init_panels: usize,
    ) -> Result<(f64, f64)> {
        let init = init_panels.max(1);
        // worklist of (lo, hi, estimate, depth)
        let mut work: Vec<(f64, f64, f64, u32)> = Vec::with_capacity(init);
        for i in 0..init {
            let lo = a + (b - a) * i as f64 / init as f64;
            let hi = a + (b - a) * (i + 1) as f64 / init as f64;
            let est = self.panel(&mut f, lo, hi);
            work.push((lo, hi, est, 0));
        }
        let mut value = 0.0;
        let mut err_acc = 0.0;
        let mut used = init;
        let local_tol = abs_tol / init as f64;
        while let Some((lo, hi, whole, depth)) = work.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.panel(&mut f, lo, mid);
            let right = self.panel(&mut f, mid, hi);
            let refined = left + right;
            let disc = (refined - whole).abs();
            let share = local_tol * 2.0_f64.powi(-(depth as i32));
            if disc <= share.max(1e-300) || depth >= 52 {
                value += refined;
                err_acc += disc;
            } else {
                used += 2;
                if used > self.max_panels {
                    return Err(Error::OracleQuadratureFailed {
                        achieved: disc,
                        target: abs_tol,
                    });
                }
                work.push((lo, mid, left, depth + 1));
                work.push((mid, hi, right, depth + 1));
            }
        }
        if err_acc > abs_tol * 4.0 {
            return Err(Error::OracleQuadratureFailed {
                achieved: err_acc,
                target: abs_tol,
            });
        }
        Ok((value, err_acc))
    }
}
