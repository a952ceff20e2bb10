//! Right-hand-side preparation: direct sampling, the compactly supported
//! mollifier with sinc-product spectral zeros, mollified sampling over an
//! enlarged domain, and sinc point evaluation.
//!
//! The mollifier is eta = psi * chi, the convolution of a standard bump
//! (support radius sqrt(d)/4) with the indicator of the centered unit cube,
//! scaled to radius epsilon and normalized on its own quadrature grid. Its
//! spectrum carries a factor prod_i sinc(omega_i / (2 pi)), which vanishes on
//! the nonzero dual lattice 2 pi Z^d.

use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::lattice::{enlarge_shape, DomainMask, DomainShape, MAX_DIM};
use crate::quadrature::gauss_legendre;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ExtensionFn = Arc<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;

/// How f is turned into lattice samples.
#[derive(Clone)]
pub enum RhsMode {
    /// f_k = f(x_k).
    Direct,
    /// f_k = (eta_eps * f_rho)(x_k); `None` fields default to epsilon = h and
    /// rho = sqrt(d) h at sampling time.
    Mollified {
        epsilon: Option<f64>,
        rho: Option<f64>,
    },
}

/// Extension of f past the domain boundary, needed wherever the mollifier
/// stencil leaves Omega.
#[derive(Clone)]
pub enum Extension {
    /// f_rho(y) = f at the nearest point of the closure of Omega.
    NearestPoint,
    /// User-supplied extension on Omega_rho; `None` marks an undefined point.
    Callback(ExtensionFn),
}

#[derive(Clone)]
pub struct RhsSpec {
    pub mode: RhsMode,
    pub f: ScalarFn,
    pub extension: Extension,
}

impl RhsSpec {
    pub fn direct(f: ScalarFn) -> Self {
        RhsSpec {
            mode: RhsMode::Direct,
            f,
            extension: Extension::NearestPoint,
        }
    }

    pub fn mollified(f: ScalarFn, epsilon: Option<f64>, rho: Option<f64>) -> Self {
        RhsSpec {
            mode: RhsMode::Mollified { epsilon, rho },
            f,
            extension: Extension::NearestPoint,
        }
    }
}

/// f(x_k) on the mask, zero elsewhere.
pub fn sample_direct(f: &ScalarFn, mask: &DomainMask) -> Result<CoefficientField> {
    let lattice = mask.lattice();
    let mut out = CoefficientField::zeros(lattice);
    let mut x = [0.0f64; MAX_DIM];
    for &lin in mask.indices() {
        lattice.point(lin, &mut x);
        let v = f(&x[..lattice.d()]);
        if !v.is_finite() {
            let mut idx = [0usize; MAX_DIM];
            lattice.decode(lin, &mut idx);
            return Err(Error::NonFiniteSample {
                index: idx[..lattice.d()].to_vec(),
            });
        }
        out.data_mut()[lin] = v;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// mollifier
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    /// Mollification radius; the scaled support is the ball of radius
    /// sqrt(d) * epsilon.
    pub epsilon: f64,
    /// Quadrature refinement q: tabulation spacing is epsilon / q.
    pub quadrature_refinement: u32,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Self {
        MollifierSpec {
            epsilon,
            quadrature_refinement: 8,
        }
    }

    /// Support radius of the bump factor before scaling.
    pub fn psi_support_radius(d: usize) -> f64 {
        (d as f64).sqrt() / 4.0
    }
}

/// eta_eps sampled on its tensor midpoint grid, with unit tabulated mass.
#[derive(Debug, Clone)]
pub struct TabulatedMollifier {
    d: usize,
    epsilon: f64,
    q: u32,
    /// Per-axis offsets of the grid in units of epsilon, symmetric about 0.
    offsets: Vec<f64>,
    /// Unscaled eta at the tensor nodes, row-major; sum * q^{-d} = 1.
    values: Vec<f64>,
}

impl TabulatedMollifier {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quadrature weight attached to each tabulated value, so that
    /// sum_i weight_i = 1 exactly.
    pub fn node_weight(&self) -> f64 {
        (self.q as f64).powi(-(self.d as i32))
    }

    /// Tabulated mass of eta_eps (1 by normalization).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.node_weight()
    }

    /// The spectrum ratio eta_hat(omega) / eta_hat(0), evaluated with the
    /// same tabulated quadrature. Real by symmetry.
    pub fn spectrum(&self, omega: &[f64]) -> f64 {
        let w = self.node_weight();
        let mut acc = 0.0;
        let mut idx = [0usize; MAX_DIM];
        let count = self.offsets.len();
        for (lin, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rem = lin;
            for axis in (0..self.d).rev() {
                idx[axis] = rem % count;
                rem /= count;
            }
            let mut phase = 0.0;
            for a in 0..self.d {
                phase += omega[a] * self.epsilon * self.offsets[idx[a]];
            }
            acc += v * w * phase.cos();
        }
        acc
    }
}

fn bump(dist_sq: f64, radius: f64) -> f64 {
    let t2 = dist_sq / (radius * radius);
    if t2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t2)).exp()
    }
}

/// (psi * chi_cube)(x) by tensor Gauss quadrature over the overlap of the
/// cube with the bump support.
fn eta_unscaled(x: &[f64], d: usize, gauss: &(Vec<f64>, Vec<f64>)) -> f64 {
    let r = MollifierSpec::psi_support_radius(d);
    let mut lo = [0.0f64; MAX_DIM];
    let mut hi = [0.0f64; MAX_DIM];
    for a in 0..d {
        lo[a] = (x[a] - r).max(-0.5);
        hi[a] = (x[a] + r).min(0.5);
        if lo[a] >= hi[a] {
            return 0.0;
        }
    }
    let (gx, gw) = gauss;
    let g = gx.len();
    let mut nodes = [[0.0f64; 32]; MAX_DIM];
    let mut weights = [[0.0f64; 32]; MAX_DIM];
    for a in 0..d {
        let mid = 0.5 * (lo[a] + hi[a]);
        let rad = 0.5 * (hi[a] - lo[a]);
        for i in 0..g {
            nodes[a][i] = mid + rad * gx[i];
            weights[a][i] = rad * gw[i];
        }
    }
    let mut acc = 0.0;
    match d {
        1 => {
            for i in 0..g {
                let dx = x[0] - nodes[0][i];
                acc += weights[0][i] * bump(dx * dx, r);
            }
        }
        2 => {
            for i in 0..g {
                let dx = x[0] - nodes[0][i];
                for j in 0..g {
                    let dy = x[1] - nodes[1][j];
                    acc += weights[0][i] * weights[1][j] * bump(dx * dx + dy * dy, r);
                }
            }
        }
        3 => {
            for i in 0..g {
                let dx = x[0] - nodes[0][i];
                for j in 0..g {
                    let dy = x[1] - nodes[1][j];
                    for k in 0..g {
                        let dz = x[2] - nodes[2][k];
                        acc += weights[0][i]
                            * weights[1][j]
                            * weights[2][k]
                            * bump(dx * dx + dy * dy + dz * dz, r);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    acc
}

pub fn build_mollifier(spec: &MollifierSpec, d: usize) -> Result<TabulatedMollifier> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidMollifier(format!("dimension {d}")));
    }
    if !(spec.epsilon > 0.0) || spec.epsilon > 0.25 {
        return Err(Error::InvalidMollifier(format!(
            "epsilon {} outside (0, 0.25]",
            spec.epsilon
        )));
    }
    let q = spec.quadrature_refinement;
    if q < 4 {
        return Err(Error::InvalidMollifier(format!("refinement q = {q} below 4")));
    }
    let span = 2.0 * (d as f64).sqrt();
    let count = (span * q as f64).ceil() as usize;
    let offsets: Vec<f64> = (0..count)
        .map(|i| (i as f64 + 0.5 - count as f64 / 2.0) / q as f64)
        .collect();

    let gauss = gauss_legendre(24);
    // tabulate one canonical orbit per symmetry class (per-axis sign flips
    // and axis permutations), then mirror
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let total = count.pow(d as u32);
    let mut values = vec![0.0f64; total];
    let mut idx = [0usize; MAX_DIM];
    for (lin, slot) in values.iter_mut().enumerate() {
        let mut rem = lin;
        for axis in (0..d).rev() {
            idx[axis] = rem % count;
            rem /= count;
        }
        let mut canon: Vec<usize> = idx[..d]
            .iter()
            .map(|&i| i.min(count - 1 - i))
            .collect();
        canon.sort_unstable();
        let key = canon.clone();
        let v = *cache.entry(key).or_insert_with(|| {
            let x: Vec<f64> = canon.iter().map(|&i| offsets[i].abs()).collect();
            eta_unscaled(&x, d, &gauss)
        });
        *slot = v;
    }

    let weight = (q as f64).powi(-(d as i32));
    let raw_mass: f64 = values.iter().sum::<f64>() * weight;
    if raw_mass < 1e-14 {
        return Err(Error::DegenerateMollifier);
    }
    for v in &mut values {
        *v /= raw_mass;
    }
    Ok(TabulatedMollifier {
        d,
        epsilon: spec.epsilon,
        q,
        offsets,
        values,
    })
}

/// The sinc-product factor S of the mollifier spectrum; vanishes at nonzero
/// integer multiples of 2 pi along each axis.
pub fn cube_spectrum_factor(omega: &[f64]) -> f64 {
    omega.iter().map(|&w| sinc(w / (2.0 * PI))).product()
}

// ---------------------------------------------------------------------------
// mollified sampling
// ---------------------------------------------------------------------------

/// f_k = sum over the tabulated stencil of eta_eps(x_k - y) f_rho(y) dy for
/// every masked k. The stencil must stay inside the enlarged domain.
pub fn mollify_sample(
    spec: &RhsSpec,
    shape: &DomainShape,
    mask: &DomainMask,
    mollifier: &TabulatedMollifier,
) -> Result<CoefficientField> {
    let (rho_opt, _eps_opt) = match spec.mode {
        RhsMode::Mollified { epsilon, rho } => (rho, epsilon),
        RhsMode::Direct => {
            return Err(Error::InvalidMollifier(
                "mollify_sample requires mollified mode".into(),
            ))
        }
    };
    let lattice = mask.lattice();
    let d = lattice.d();
    if mollifier.d() != d {
        return Err(Error::InvalidMollifier(format!(
            "mollifier dimension {} vs lattice {}",
            mollifier.d(),
            d
        )));
    }
    let h = lattice.h();
    let sqrt_d = (d as f64).sqrt();
    let rho = rho_opt.unwrap_or(sqrt_d * h);
    if rho < sqrt_d * h - 1e-15 {
        return Err(Error::InvalidMollifier(format!(
            "rho = {rho} below sqrt(d) h = {}",
            sqrt_d * h
        )));
    }
    let enlarged = enlarge_shape(shape, rho)?;
    let eps = mollifier.epsilon();
    let weight = mollifier.node_weight();
    let offsets = mollifier.offsets();
    let count = offsets.len();

    let mut out = CoefficientField::zeros(lattice);
    let mut x = [0.0f64; MAX_DIM];
    let mut y = [0.0f64; MAX_DIM];
    let mut proj = [0.0f64; MAX_DIM];
    let mut gidx = [0usize; MAX_DIM];
    for &lin in mask.indices() {
        lattice.point(lin, &mut x);
        let mut acc = 0.0;
        for (glin, &gv) in mollifier.values().iter().enumerate() {
            if gv == 0.0 {
                continue;
            }
            let mut rem = glin;
            for axis in (0..d).rev() {
                gidx[axis] = rem % count;
                rem /= count;
            }
            for a in 0..d {
                y[a] = x[a] - eps * offsets[gidx[a]];
            }
            let yp = &y[..d];
            if enlarged.signed_distance(yp) > 1e-9 {
                return Err(Error::ExtensionInsufficient);
            }
            let fv = match &spec.extension {
                Extension::Callback(cb) => cb(yp).ok_or(Error::ExtensionInsufficient)?,
                Extension::NearestPoint => {
                    if shape.contains(yp) {
                        (spec.f)(yp)
                    } else {
                        shape.project(yp, &mut proj);
                        (spec.f)(&proj[..d])
                    }
                }
            };
            acc += gv * weight * fv;
        }
        if !acc.is_finite() {
            let mut idx = [0usize; MAX_DIM];
            lattice.decode(lin, &mut idx);
            return Err(Error::NonFiniteSample {
                index: idx[..d].to_vec(),
            });
        }
        out.data_mut()[lin] = acc;
    }
    Ok(out)
}

/// Build the discrete right-hand side for a spec, dispatching on the mode.
pub fn build_rhs(
    spec: &RhsSpec,
    shape: &DomainShape,
    mask: &DomainMask,
) -> Result<CoefficientField> {
    match spec.mode {
        RhsMode::Direct => sample_direct(&spec.f, mask),
        RhsMode::Mollified { epsilon, rho: _ } => {
            let eps = epsilon.unwrap_or(mask.lattice().h());
            let moll = build_mollifier(&MollifierSpec::new(eps), mask.lattice().d())?;
            mollify_sample(spec, shape, mask, &moll)
        }
    }
}

// ---------------------------------------------------------------------------
// sinc interpolation
// ---------------------------------------------------------------------------

pub const DEFAULT_SINC_WINDOW: usize = 64;

/// The coefficients of a sinc function are its grid samples, so the
/// interpolation operator acts as the identity on coefficient data. Kept as
/// the named counterpart of `point_eval`.
pub fn sinc_interpolate(samples: CoefficientField) -> CoefficientField {
    samples
}

fn sinc(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() < 1e-12 * t.abs().max(1.0) {
        if r == 0.0 {
            return 1.0;
        }
        return 0.0;
    }
    (PI * t).sin() / (PI * t)
}

#[derive(Debug, Clone, Copy)]
pub struct PointEval {
    pub value: f64,
    /// Heuristic bound on the tail dropped by the finite window.
    pub truncation_hint: f64,
}

/// v_h(x) = sum_k v_k sinc(N x - k), truncated to `window` terms per axis.
pub fn point_eval_windowed(v: &CoefficientField, x: &[f64], window: usize) -> PointEval {
    let lattice = v.lattice();
    let d = lattice.d();
    let n = lattice.n();
    debug_assert_eq!(x.len(), d);
    let mut axis_k: Vec<Vec<usize>> = Vec::with_capacity(d);
    let mut axis_s: Vec<Vec<f64>> = Vec::with_capacity(d);
    for a in 0..d {
        let t = n as f64 * x[a];
        let center = t.floor() as i64;
        let lo = (center - window as i64 + 1).max(0) as usize;
        let hi = ((center + window as i64) as usize).min(n - 1);
        let mut ks = Vec::with_capacity(hi - lo + 1);
        let mut ss = Vec::with_capacity(hi - lo + 1);
        for k in lo..=hi {
            ks.push(k);
            ss.push(sinc(t - k as f64));
        }
        axis_k.push(ks);
        axis_s.push(ss);
    }
    let data = v.data();
    let mut value = 0.0;
    match d {
        1 => {
            for (k, s) in axis_k[0].iter().zip(&axis_s[0]) {
                value += data[*k] * s;
            }
        }
        2 => {
            for (k1, s1) in axis_k[0].iter().zip(&axis_s[0]) {
                let row = k1 * n;
                for (k2, s2) in axis_k[1].iter().zip(&axis_s[1]) {
                    value += data[row + k2] * s1 * s2;
                }
            }
        }
        3 => {
            for (k1, s1) in axis_k[0].iter().zip(&axis_s[0]) {
                for (k2, s2) in axis_k[1].iter().zip(&axis_s[1]) {
                    let row = (k1 * n + k2) * n;
                    let s12 = s1 * s2;
                    for (k3, s3) in axis_k[2].iter().zip(&axis_s[2]) {
                        value += data[row + k3] * s12 * s3;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    let hint = d as f64 * v.norm_inf() * (2.0 / (PI * PI)) * ((n as f64).ln() + 1.0)
        / window as f64;
    PointEval {
        value,
        truncation_hint: hint,
    }
}

pub fn point_eval(v: &CoefficientField, x: &[f64]) -> f64 {
    point_eval_windowed(v, x, DEFAULT_SINC_WINDOW).value
}
