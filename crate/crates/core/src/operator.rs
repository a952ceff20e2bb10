//! Application of the discrete operator: FFT-speed full and masked variants,
//! a dense ground-truth path, and the periodic-symbol preconditioner.

use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::fft::NdFft;
use crate::kernel::{FracOrder, SpectralKernel};
use crate::lattice::{DomainMask, Lattice, MAX_DIM};
use rustfft::num_complex::Complex;
use std::sync::Arc;

/// Relative bound on the imaginary residue left after the real convolution.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Guard for the dense O(N^{2d}) oracle.
pub const DENSE_APPLY_GUARD: usize = 4096;

/// The masked system S Phi S^T behind the linear solve.
#[derive(Debug, Clone)]
pub struct MaskedOperator {
    kernel: Arc<SpectralKernel>,
    mask: DomainMask,
}

impl MaskedOperator {
    pub fn new(kernel: Arc<SpectralKernel>, mask: DomainMask) -> Result<Self> {
        if kernel.d() != mask.lattice().d() || kernel.n() != mask.lattice().n() {
            return Err(Error::ShapeMismatch(format!(
                "kernel {}^{} vs mask lattice {}^{}",
                kernel.n(),
                kernel.d(),
                mask.lattice().n(),
                mask.lattice().d()
            )));
        }
        Ok(MaskedOperator { kernel, mask })
    }

    pub fn kernel(&self) -> &SpectralKernel {
        &self.kernel
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn lattice(&self) -> Lattice {
        self.mask.lattice()
    }
}

fn check_compat(kernel: &SpectralKernel, v: &CoefficientField) -> Result<()> {
    if kernel.d() != v.lattice().d() || kernel.n() != v.lattice().n() {
        return Err(Error::ShapeMismatch(format!(
            "kernel {}^{} vs field lattice {}^{}",
            kernel.n(),
            kernel.d(),
            v.lattice().n(),
            v.lattice().d()
        )));
    }
    Ok(())
}

/// w_j = N^{2s} sum_k v_k Phi(j-k), as a zero-padded circular convolution on
/// the {2N}^d grid.
pub fn apply_full(kernel: &SpectralKernel, v: &CoefficientField) -> Result<CoefficientField> {
    check_compat(kernel, v)?;
    let lattice = v.lattice();
    let d = lattice.d();
    let n = lattice.n();
    let two_n = 2 * n;
    let fft: &NdFft = kernel.padded_fft();
    let mut pad = vec![Complex::new(0.0, 0.0); fft.len()];

    let mut idx = [0usize; MAX_DIM];
    for (lin, &val) in v.data().iter().enumerate() {
        lattice.decode(lin, &mut idx);
        let mut plin = 0usize;
        for &k in idx.iter().take(d) {
            plin = plin * two_n + k;
        }
        pad[plin] = Complex::new(val, 0.0);
    }

    fft.forward(&mut pad);
    for (z, t) in pad.iter_mut().zip(kernel.padded_dft()) {
        *z *= t;
    }
    fft.inverse(&mut pad);

    let mut out = CoefficientField::zeros(lattice);
    let scale = kernel.scale();
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    {
        let data = out.data_mut();
        for (lin, slot) in data.iter_mut().enumerate() {
            lattice.decode(lin, &mut idx);
            let mut plin = 0usize;
            for &k in idx.iter().take(d) {
                plin = plin * two_n + k;
            }
            let z = pad[plin];
            max_re = max_re.max(z.re.abs());
            max_im = max_im.max(z.im.abs());
            *slot = scale * z.re;
        }
    }
    if max_im > IMAG_RESIDUE_TOL * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::ConvolutionIntegrity {
            residue: max_im / max_re.max(f64::MIN_POSITIVE),
        });
    }
    Ok(out)
}

/// w = S apply_full(S^T v): exterior entries of the input are zeroed, the
/// full operator applied, and the output restricted to the mask.
pub fn apply_masked(op: &MaskedOperator, v: &CoefficientField) -> Result<CoefficientField> {
    check_compat(op.kernel(), v)?;
    let mut masked_in = v.clone();
    zero_exterior(&mut masked_in, op.mask());
    let mut w = apply_full(op.kernel(), &masked_in)?;
    zero_exterior(&mut w, op.mask());
    Ok(w)
}

pub(crate) fn zero_exterior(v: &mut CoefficientField, mask: &DomainMask) {
    for (slot, &inside) in v.data_mut().iter_mut().zip(mask.inside()) {
        if !inside {
            *slot = 0.0;
        }
    }
}

/// Direct nested-loop evaluation of the same sums; ground truth for small N.
pub fn apply_dense_oracle(
    kernel: &SpectralKernel,
    mask: Option<&DomainMask>,
    v: &CoefficientField,
) -> Result<CoefficientField> {
    check_compat(kernel, v)?;
    let lattice = v.lattice();
    if lattice.num_points() > DENSE_APPLY_GUARD {
        return Err(Error::SizeGuard(format!(
            "dense apply needs N^d <= {DENSE_APPLY_GUARD}, got {}",
            lattice.num_points()
        )));
    }
    let d = lattice.d();
    let mut input = v.clone();
    if let Some(m) = mask {
        zero_exterior(&mut input, m);
    }
    let mut out = CoefficientField::zeros(lattice);
    let scale = kernel.scale();
    let mut ji = [0usize; MAX_DIM];
    let mut ki = [0usize; MAX_DIM];
    let mut m = [0i64; MAX_DIM];
    for j in 0..lattice.num_points() {
        if let Some(msk) = mask {
            if !msk.is_inside(j) {
                continue;
            }
        }
        lattice.decode(j, &mut ji);
        let mut acc = 0.0;
        for (k, &vk) in input.data().iter().enumerate() {
            if vk == 0.0 {
                continue;
            }
            lattice.decode(k, &mut ki);
            for axis in 0..d {
                m[axis] = ji[axis] as i64 - ki[axis] as i64;
            }
            acc += vk * kernel.base_entry(&m[..d]);
        }
        out.data_mut()[j] = scale * acc;
    }
    Ok(out)
}

/// Periodic fractional Laplacian on the N-torus, diagonal in the DFT basis.
/// The zero mode gets the smallest nonzero eigenvalue so P stays invertible.
#[derive(Clone)]
pub struct PeriodicPreconditioner {
    lattice: Lattice,
    eigenvalues: Vec<f64>,
    fft: NdFft,
}

impl PeriodicPreconditioner {
    pub fn new(lattice: Lattice, s: FracOrder) -> Self {
        let d = lattice.d();
        let n = lattice.n();
        let dims = vec![n; d];
        let fft = NdFft::new(&dims);
        let two_pi = 2.0 * std::f64::consts::PI;
        let lambda_min = two_pi.powf(2.0 * s.value());
        let mut eigenvalues = vec![0.0; lattice.num_points()];
        let mut idx = [0usize; MAX_DIM];
        for (lin, ev) in eigenvalues.iter_mut().enumerate() {
            lattice.decode(lin, &mut idx);
            let mut mag2 = 0.0;
            for &k in idx.iter().take(d) {
                // signed frequency in [-N/2, N/2)
                let kappa = if k < n.div_ceil(2) {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                mag2 += kappa * kappa;
            }
            *ev = if mag2 == 0.0 {
                lambda_min
            } else {
                (two_pi * mag2.sqrt()).powf(2.0 * s.value())
            };
        }
        PeriodicPreconditioner {
            lattice,
            eigenvalues,
            fft,
        }
    }

    fn diagonal_apply(&self, r: &CoefficientField, invert: bool) -> Result<CoefficientField> {
        if r.lattice() != self.lattice {
            return Err(Error::ShapeMismatch("preconditioner lattice".into()));
        }
        let mut buf: Vec<Complex<f64>> = r
            .data()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        self.fft.forward(&mut buf);
        for (z, &ev) in buf.iter_mut().zip(&self.eigenvalues) {
            if invert {
                *z /= ev;
            } else {
                *z *= ev;
            }
        }
        self.fft.inverse(&mut buf);
        let mut out = CoefficientField::zeros(self.lattice);
        for (slot, z) in out.data_mut().iter_mut().zip(&buf) {
            *slot = z.re;
        }
        Ok(out)
    }

    /// z = P^{-1} r.
    pub fn apply_inverse(&self, r: &CoefficientField) -> Result<CoefficientField> {
        self.diagonal_apply(r, true)
    }

    /// z = P r (the forward symbol; used to verify the diagonal round trip).
    pub fn apply_forward(&self, r: &CoefficientField) -> Result<CoefficientField> {
        self.diagonal_apply(r, false)
    }
}

/// One-shot preconditioner application z = P^{-1} r.
pub fn precond_apply(
    lattice: Lattice,
    s: FracOrder,
    r: &CoefficientField,
) -> Result<CoefficientField> {
    PeriodicPreconditioner::new(lattice, s).apply_inverse(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::assemble_kernel;
    use crate::lattice::{build_mask, DomainShape};

    fn kernel(d: usize, n: usize, sv: f64) -> Arc<SpectralKernel> {
        Arc::new(assemble_kernel(d, n, FracOrder::new(sv).unwrap(), 4).unwrap())
    }

    fn lat(d: usize, n: usize) -> Lattice {
        Lattice::new(d, n).unwrap()
    }

    #[test]
    fn impulse_reproduces_kernel_row() {
        let k = kernel(1, 8, 0.5);
        let lattice = lat(1, 8);
        let mut v = CoefficientField::zeros(lattice);
        v.data_mut()[3] = 1.0;
        let w = apply_full(&k, &v).unwrap();
        for j in 0..8 {
            let want = k.scale() * k.base_entry(&[j as i64 - 3]);
            assert!((w.data()[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let k = kernel(2, 4, 0.25);
        let v = CoefficientField::zeros(lat(2, 4));
        let w = apply_full(&k, &v).unwrap();
        assert!(w.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fft_matches_dense_oracle() {
        let k = kernel(1, 8, 0.5);
        let lattice = lat(1, 8);
        let ones = CoefficientField::from_vec(lattice, vec![1.0; 8]).unwrap();
        let w = apply_full(&k, &ones).unwrap();
        let dense = apply_dense_oracle(&k, None, &ones).unwrap();
        for (a, b) in w.data().iter().zip(dense.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn masked_full_box_equals_full() {
        let k = kernel(2, 8, 0.5);
        let lattice = lat(2, 8);
        let mask = build_mask(
            &DomainShape::cuboid(vec![0.0, 0.0], vec![1.0, 1.0]),
            lattice,
        )
        .unwrap();
        let op = MaskedOperator::new(k.clone(), mask).unwrap();
        let v = CoefficientField::from_fn(lattice, |x| (x[0] - 0.3) * (x[1] + 0.1)).unwrap();
        let wm = apply_masked(&op, &v).unwrap();
        let wf = apply_full(&k, &v).unwrap();
        for (a, b) in wm.data().iter().zip(wf.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_matches_dense_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let k = kernel(1, 16, 0.5);
        let lattice = lat(1, 16);
        let mask = build_mask(&DomainShape::ball(vec![0.5], 0.45), lattice).unwrap();
        let op = MaskedOperator::new(k.clone(), mask.clone()).unwrap();
        let v =
            CoefficientField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0)).unwrap();
        let fast = apply_masked(&op, &v).unwrap();
        let dense = apply_dense_oracle(&k, Some(&mask), &v).unwrap();
        for (a, b) in fast.data().iter().zip(dense.data()) {
            assert!((a - b).abs() < 1e-10);
        }
        // exterior entries exactly zero
        for (lin, &x) in fast.data().iter().enumerate() {
            if !mask.is_inside(lin) {
                assert_eq!(x, 0.0);
            }
        }
    }

    #[test]
    fn masked_impulse_is_restricted_kernel_row() {
        let k = kernel(1, 16, 0.5);
        let lattice = lat(1, 16);
        let mask = build_mask(&DomainShape::ball(vec![0.5], 0.45), lattice).unwrap();
        let op = MaskedOperator::new(k.clone(), mask.clone()).unwrap();
        let k0 = 8usize; // interior point
        let mut v = CoefficientField::zeros(lattice);
        v.data_mut()[k0] = 1.0;
        let w = apply_masked(&op, &v).unwrap();
        for j in 0..16usize {
            let want = if mask.is_inside(j) {
                k.scale() * k.base_entry(&[j as i64 - k0 as i64])
            } else {
                0.0
            };
            assert!((w.data()[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_oracle_is_linear() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let k = kernel(1, 8, 0.75);
        let lattice = lat(1, 8);
        let v = CoefficientField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0)).unwrap();
        let w = CoefficientField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0)).unwrap();
        let combo = CoefficientField::from_vec(
            lattice,
            v.data()
                .iter()
                .zip(w.data())
                .map(|(a, b)| 2.0 * a - 3.0 * b)
                .collect(),
        )
        .unwrap();
        let oc = apply_dense_oracle(&k, None, &combo).unwrap();
        let ov = apply_dense_oracle(&k, None, &v).unwrap();
        let ow = apply_dense_oracle(&k, None, &w).unwrap();
        for i in 0..8 {
            let want = 2.0 * ov.data()[i] - 3.0 * ow.data()[i];
            assert!((oc.data()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_oracle_guards_size() {
        let k = kernel(2, 128, 0.5);
        let v = CoefficientField::zeros(lat(2, 128));
        assert!(matches!(
            apply_dense_oracle(&k, None, &v),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn preconditioner_diagonal_action() {
        let lattice = lat(1, 8);
        let s = FracOrder::new(0.5).unwrap();
        let p = PeriodicPreconditioner::new(lattice, s);
        let two_pi = 2.0 * std::f64::consts::PI;

        // constant field: only the zero frequency, eigenvalue lambda_min
        let c = CoefficientField::from_vec(lattice, vec![3.0; 8]).unwrap();
        let z = p.apply_inverse(&c).unwrap();
        for &v in z.data() {
            assert!((v - 3.0 / two_pi).abs() < 1e-12);
        }

        // single Fourier mode k = 2
        let mode =
            CoefficientField::from_fn(lattice, |x| (two_pi * 2.0 * x[0]).cos()).unwrap();
        let z = p.apply_inverse(&mode).unwrap();
        let lambda = two_pi * 2.0;
        for (a, b) in z.data().iter().zip(mode.data()) {
            assert!((a - b / lambda).abs() < 1e-12);
        }

        // P then P^{-1} round trip
        let r = CoefficientField::from_fn(lattice, |x| (x[0] - 0.3).powi(2)).unwrap();
        let back = p.apply_forward(&p.apply_inverse(&r).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(r.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_is_symmetric_and_positive_on_mask() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let k = kernel(2, 8, 0.5);
        let lattice = lat(2, 8);
        let mask = build_mask(&DomainShape::ball(vec![0.5, 0.5], 0.45), lattice).unwrap();
        let op = MaskedOperator::new(k, mask.clone()).unwrap();
        for _ in 0..20 {
            let mut v =
                CoefficientField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let mut w =
                CoefficientField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0)).unwrap();
            zero_exterior(&mut v, &mask);
            zero_exterior(&mut w, &mask);
            let av = apply_masked(&op, &v).unwrap();
            let aw = apply_masked(&op, &w).unwrap();
            let left = av.dot(&w);
            let right = v.dot(&aw);
            let scale = left.abs().max(right.abs()).max(1e-30);
            assert!((left - right).abs() / scale < 1e-10);
            let quad = v.dot(&av) / lattice.num_points() as f64;
            assert!(quad > 0.0, "quadratic form not positive: {quad}");
        }
    }
}
