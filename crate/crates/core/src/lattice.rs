//! Uniform lattice on [0,1)^d, geometric domain shapes, lattice masks,
//! Minkowski enlargement and the boundary-strip diagnostic.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Points within this distance of the boundary resolve as exterior.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub const MAX_DIM: usize = 3;

/// Uniform lattice x_k = k/N, k in {0,..,N-1}^d, over the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    d: usize,
    n: usize,
}

impl Lattice {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidLattice(format!("dimension {d} not in 1..=3")));
        }
        if n < 4 {
            return Err(Error::InvalidLattice(format!("N = {n} below minimum 4")));
        }
        Ok(Lattice { d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing h = 1/N.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn num_points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Decode a linear (row-major) index into per-axis indices.
    pub fn decode(&self, mut lin: usize, out: &mut [usize]) {
        for axis in (0..self.d).rev() {
            out[axis] = lin % self.n;
            lin /= self.n;
        }
    }

    pub fn encode(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for &k in idx.iter().take(self.d) {
            lin = lin * self.n + k;
        }
        lin
    }

    /// Physical coordinates of the lattice point with linear index `lin`.
    pub fn point(&self, lin: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        self.decode(lin, &mut idx);
        for axis in 0..self.d {
            out[axis] = idx[axis] as f64 / self.n as f64;
        }
    }
}

/// Geometric region inside the unit box.
///
/// Boxes are half-open `[lo, hi)` so that `box(0,1)` covers the full lattice;
/// all other shapes are open sets with boundary points resolved as exterior.
#[derive(Clone)]
pub enum DomainShape {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Simple polygon, d = 2 only.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// User-supplied signed distance (negative inside).
    SignedDistance {
        dim: usize,
        sdf: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    },
    /// Minkowski enlargement of `base` by `rho`, realized as a signed
    /// distance offset.
    Offset {
        base: Box<DomainShape>,
        rho: f64,
    },
}

impl fmt::Debug for DomainShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainShape::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            DomainShape::Box { lo, hi } => {
                f.debug_struct("Box").field("lo", lo).field("hi", hi).finish()
            }
            DomainShape::Polygon { vertices } => f
                .debug_struct("Polygon")
                .field("vertices", &vertices.len())
                .finish(),
            DomainShape::SignedDistance { dim, .. } => {
                f.debug_struct("SignedDistance").field("dim", dim).finish()
            }
            DomainShape::Offset { base, rho } => f
                .debug_struct("Offset")
                .field("base", base)
                .field("rho", rho)
                .finish(),
        }
    }
}

impl DomainShape {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        DomainShape::Ball { center, radius }
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        DomainShape::Box { lo, hi }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        DomainShape::Polygon { vertices }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainShape::Ball { center, .. } => center.len(),
            DomainShape::Box { lo, .. } => lo.len(),
            DomainShape::Polygon { .. } => 2,
            DomainShape::SignedDistance { dim, .. } => *dim,
            DomainShape::Offset { base, .. } => base.dim(),
        }
    }

    /// Check structural invariants: well-formed fields and closure contained
    /// in the closed unit box.
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainShape::Ball { center, radius } => {
                if center.is_empty() || center.len() > MAX_DIM {
                    return Err(Error::DegenerateShape("ball center dimension".into()));
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::DegenerateShape("ball radius must be positive".into()));
                }
                for &c in center {
                    if !(0.0..1.0).contains(&c) || c - radius < 0.0 || c + radius > 1.0 {
                        return Err(Error::DegenerateShape(
                            "ball closure exceeds unit box".into(),
                        ));
                    }
                }
                Ok(())
            }
            DomainShape::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.len() > MAX_DIM {
                    return Err(Error::DegenerateShape("box dimension".into()));
                }
                for (&a, &b) in lo.iter().zip(hi) {
                    if !(a < b) || a < 0.0 || b > 1.0 {
                        return Err(Error::DegenerateShape(
                            "box needs 0 <= lo < hi <= 1 componentwise".into(),
                        ));
                    }
                }
                Ok(())
            }
            DomainShape::Polygon { vertices } => validate_polygon(vertices),
            DomainShape::SignedDistance { dim, .. } => {
                if *dim == 0 || *dim > MAX_DIM {
                    return Err(Error::DegenerateShape("sdf dimension".into()));
                }
                Ok(())
            }
            DomainShape::Offset { base, rho } => {
                if !(*rho >= 0.0) {
                    return Err(Error::DegenerateShape("offset radius negative".into()));
                }
                base.validate()
            }
        }
    }

    /// Signed distance to the region (negative inside). Exact for balls and
    /// boxes, exact for polygons, offset-exact for enlarged shapes.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            DomainShape::Ball { center, radius } => {
                let mut r2 = 0.0;
                for (xi, ci) in x.iter().zip(center) {
                    r2 += (xi - ci) * (xi - ci);
                }
                r2.sqrt() - radius
            }
            DomainShape::Box { lo, hi } => {
                let mut outside2 = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for i in 0..lo.len() {
                    let q = (lo[i] - x[i]).max(x[i] - hi[i]);
                    if q > 0.0 {
                        outside2 += q * q;
                    }
                    inside = inside.max(q);
                }
                if outside2 > 0.0 {
                    outside2.sqrt()
                } else {
                    inside
                }
            }
            DomainShape::Polygon { vertices } => polygon_signed_distance(vertices, x),
            DomainShape::SignedDistance { sdf, .. } => sdf(x),
            DomainShape::Offset { base, rho } => base.signed_distance(x) - rho,
        }
    }

    /// Open-set membership (the realization of x_k in Omega). Boundary points
    /// within `BOUNDARY_TOL` resolve as exterior; boxes are half-open [lo, hi).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainShape::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&xi, (&a, &b))| xi >= a && xi < b - BOUNDARY_TOL),
            _ => self.signed_distance(x) < -BOUNDARY_TOL,
        }
    }

    /// Closest point of the closure to `x` (identity inside). Used by the
    /// nearest-point extension of right-hand sides.
    pub fn project(&self, x: &[f64], out: &mut [f64]) {
        out[..x.len()].copy_from_slice(x);
        match self {
            DomainShape::Ball { center, radius } => {
                let mut r2 = 0.0;
                for (xi, ci) in x.iter().zip(center) {
                    r2 += (xi - ci) * (xi - ci);
                }
                let r = r2.sqrt();
                if r > *radius && r > 0.0 {
                    let t = radius / r;
                    for i in 0..center.len() {
                        out[i] = center[i] + t * (x[i] - center[i]);
                    }
                }
            }
            DomainShape::Box { lo, hi } => {
                for i in 0..lo.len() {
                    out[i] = x[i].clamp(lo[i], hi[i]);
                }
            }
            DomainShape::Polygon { vertices } => {
                if polygon_signed_distance(vertices, x) > 0.0 {
                    let p = polygon_closest_point(vertices, x);
                    out[0] = p[0];
                    out[1] = p[1];
                }
            }
            _ => {
                // Gradient-descent projection on the signed distance; adequate
                // for the short hops the mollifier stencil takes.
                let d = self.dim();
                let mut z = [0.0f64; MAX_DIM];
                z[..d].copy_from_slice(&x[..d]);
                for _ in 0..12 {
                    let sd = self.signed_distance(&z[..d]);
                    if sd <= 0.0 {
                        break;
                    }
                    let eps = 1e-7;
                    let mut g = [0.0f64; MAX_DIM];
                    let mut norm2 = 0.0;
                    for i in 0..d {
                        let mut zp = z;
                        zp[i] += eps;
                        g[i] = (self.signed_distance(&zp[..d]) - sd) / eps;
                        norm2 += g[i] * g[i];
                    }
                    if norm2 < 1e-20 {
                        break;
                    }
                    for i in 0..d {
                        z[i] -= sd * g[i] / norm2;
                    }
                }
                out[..d].copy_from_slice(&z[..d]);
            }
        }
    }

    /// Conservative axis-aligned bounding box of the closure, if one is
    /// available analytically.
    fn conservative_bbox(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            DomainShape::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            DomainShape::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            DomainShape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                Some((lo.to_vec(), hi.to_vec()))
            }
            DomainShape::SignedDistance { .. } => None,
            DomainShape::Offset { base, rho } => base.conservative_bbox().map(|(lo, hi)| {
                (
                    lo.iter().map(|a| a - rho).collect(),
                    hi.iter().map(|b| b + rho).collect(),
                )
            }),
        }
    }
}

/// Membership test for a single point. Preconditions: finite coordinates
/// inside the unit box.
pub fn shape_contains(shape: &DomainShape, x: &[f64]) -> Result<bool> {
    shape.validate()?;
    if x.len() != shape.dim() {
        return Err(Error::DimensionMismatch {
            shape: shape.dim(),
            lattice: x.len(),
        });
    }
    Ok(shape.contains(x))
}

/// Lattice mask of a shape: `inside[k]` iff x_k lies in the open region.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    lattice: Lattice,
    inside: Vec<bool>,
    indices: Vec<usize>,
}

impl DomainMask {
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    /// Linear indices of the masked (interior) lattice points, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn is_inside(&self, lin: usize) -> bool {
        self.inside[lin]
    }
}

/// Evaluate the shape at every lattice point.
pub fn build_mask(shape: &DomainShape, lattice: Lattice) -> Result<DomainMask> {
    shape.validate()?;
    if shape.dim() != lattice.d() {
        return Err(Error::DimensionMismatch {
            shape: shape.dim(),
            lattice: lattice.d(),
        });
    }
    let total = lattice.num_points();
    let mut inside = vec![false; total];
    let mut indices = Vec::new();
    let mut x = [0.0f64; MAX_DIM];
    for lin in 0..total {
        lattice.point(lin, &mut x);
        if shape.contains(&x[..lattice.d()]) {
            inside[lin] = true;
            indices.push(lin);
        }
    }
    if indices.is_empty() {
        return Err(Error::EmptyDiscreteDomain);
    }
    Ok(DomainMask {
        lattice,
        inside,
        indices,
    })
}

/// Minkowski enlargement by a ball of radius `rho`. Exact for balls and
/// boxes; a signed-distance offset otherwise.
pub fn enlarge_shape(shape: &DomainShape, rho: f64) -> Result<DomainShape> {
    shape.validate()?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::DegenerateShape("enlargement radius".into()));
    }
    let enlarged = match shape {
        DomainShape::Ball { center, radius } => DomainShape::Ball {
            center: center.clone(),
            radius: radius + rho,
        },
        DomainShape::Box { lo, hi } => DomainShape::Box {
            lo: lo.iter().map(|a| a - rho).collect(),
            hi: hi.iter().map(|b| b + rho).collect(),
        },
        DomainShape::Offset { base, rho: r0 } => DomainShape::Offset {
            base: base.clone(),
            rho: r0 + rho,
        },
        other => DomainShape::Offset {
            base: Box::new(other.clone()),
            rho,
        },
    };
    check_inside_unit_box(&enlarged)?;
    Ok(enlarged)
}

fn check_inside_unit_box(shape: &DomainShape) -> Result<()> {
    if let Some((lo, hi)) = shape.conservative_bbox() {
        for (&a, &b) in lo.iter().zip(&hi) {
            if a < 0.0 || b > 1.0 {
                return Err(Error::EnlargedDomainExceedsBox);
            }
        }
        return Ok(());
    }
    // No analytic bound: sample the faces of the unit box and require the
    // region to stay clear of them.
    let d = shape.dim();
    let grid = 33usize;
    let mut x = [0.0f64; MAX_DIM];
    let probe = |x: &[f64]| shape.signed_distance(x) < 0.0;
    for axis in 0..d {
        for &face in &[0.0, 1.0] {
            let mut hit = false;
            let others: Vec<usize> = (0..d).filter(|&i| i != axis).collect();
            let count = grid.pow(others.len() as u32);
            for c in 0..count {
                let mut rem = c;
                for &o in &others {
                    x[o] = (rem % grid) as f64 / (grid - 1) as f64;
                    rem /= grid;
                }
                x[axis] = face;
                if probe(&x[..d]) {
                    hit = true;
                    break;
                }
            }
            if hit {
                return Err(Error::EnlargedDomainExceedsBox);
            }
        }
    }
    Ok(())
}

/// Number of lattice points in the exterior strip (Omega + B_h) \ Omega.
pub fn strip_point_count(shape: &DomainShape, lattice: Lattice) -> Result<usize> {
    shape.validate()?;
    if shape.dim() != lattice.d() {
        return Err(Error::DimensionMismatch {
            shape: shape.dim(),
            lattice: lattice.d(),
        });
    }
    let h = lattice.h();
    let mut count = 0;
    let mut x = [0.0f64; MAX_DIM];
    for lin in 0..lattice.num_points() {
        lattice.point(lin, &mut x);
        let p = &x[..lattice.d()];
        if !shape.contains(p) && shape.signed_distance(p) < h {
            count += 1;
        }
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// polygon helpers (d = 2)
// ---------------------------------------------------------------------------

fn validate_polygon(vertices: &[[f64; 2]]) -> Result<()> {
    if vertices.len() < 3 {
        return Err(Error::DegenerateShape("polygon needs >= 3 vertices".into()));
    }
    for v in vertices {
        if !v.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c)) {
            return Err(Error::DegenerateShape(
                "polygon vertex outside unit box".into(),
            ));
        }
    }
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15 {
            return Err(Error::DegenerateShape("repeated polygon vertex".into()));
        }
    }
    // simple polygon: non-adjacent edges must not intersect
    for i in 0..n {
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
            let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return Err(Error::DegenerateShape("self-intersecting polygon".into()));
            }
        }
    }
    Ok(())
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(a1: [f64; 2], a2: [f64; 2], b1: [f64; 2], b2: [f64; 2]) -> bool {
    let d1 = orient(a1, a2, b1);
    let d2 = orient(a1, a2, b2);
    let d3 = orient(b1, b2, a1);
    let d4 = orient(b1, b2, a2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn polygon_signed_distance(vertices: &[[f64; 2]], x: &[f64]) -> f64 {
    let mut dist2 = f64::INFINITY;
    let mut inside = false;
    let n = vertices.len();
    let (px, py) = (x[0], x[1]);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        // distance to segment ab
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (wx, wy) = (px - a[0], py - a[1]);
        let t = ((wx * ex + wy * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
        let (dx, dy) = (wx - t * ex, wy - t * ey);
        dist2 = dist2.min(dx * dx + dy * dy);
        // even-odd ray crossing
        if (a[1] > py) != (b[1] > py) {
            let xint = a[0] + (py - a[1]) * ex / ey;
            if px < xint {
                inside = !inside;
            }
        }
    }
    let d = dist2.sqrt();
    if inside {
        -d
    } else {
        d
    }
}

fn polygon_closest_point(vertices: &[[f64; 2]], x: &[f64]) -> [f64; 2] {
    let mut best = vertices[0];
    let mut best2 = f64::INFINITY;
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (wx, wy) = (x[0] - a[0], x[1] - a[1]);
        let t = ((wx * ex + wy * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
        let p = [a[0] + t * ex, a[1] + t * ey];
        let d2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
        if d2 < best2 {
            best2 = d2;
            best = p;
        }
    }
    best
}
