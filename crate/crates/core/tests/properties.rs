//! Cross-module invariants: oracle agreement, exactness of the discrete
//! operator on the sinc space, stability of the discrete norms across
//! refinement, and randomized structural properties.

use fracsinc_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

fn frac(s: f64) -> FracOrder {
    FracOrder::new(s).unwrap()
}

fn kernel_2d_n8() -> &'static SpectralKernel {
    static KERNEL: OnceLock<SpectralKernel> = OnceLock::new();
    KERNEL.get_or_init(|| assemble_kernel(2, 8, frac(0.5), 4).unwrap())
}

#[test]
fn assembled_kernel_tracks_oracle_across_orders() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
    for &sv in &[0.25, 0.5, 0.75] {
        for d in 1..=2usize {
            let n = 8;
            let kernel = assemble_kernel(d, n, frac(sv), 8).unwrap();
            let phi0 = kernel.base_entry(&vec![0; d]);
            for _ in 0..4 {
                let m: Vec<i64> = (0..d).map(|_| rng.gen_range(0..n as i64)).collect();
                let oracle = kernel_entry_oracle(d, frac(sv), &m, 1e-8).unwrap();
                let got = kernel.base_entry(&m);
                let rel = (got - oracle).abs() / oracle.abs().max(phi0);
                assert!(rel <= 1e-6, "d={d} s={sv} m={m:?}: rel={rel:e}");
            }
        }
    }
}

/// The discrete operator is the exact fractional Laplacian on the sinc
/// space: pointwise values of (-Delta)^s v_h at grid points, computed by
/// quadrature of the band-limited Fourier integral, match the convolution.
#[test]
fn operator_exact_on_sinc_space() {
    let n = 8usize;
    let s = frac(0.5);
    let kernel = assemble_kernel(1, n, s, 8).unwrap();
    let lattice = Lattice::new(1, n).unwrap();
    let mut v = CoefficientField::zeros(lattice);
    v.data_mut()[3] = 0.7;
    v.data_mut()[4] = -0.4;
    v.data_mut()[5] = 0.2;
    let w = apply_full(&kernel, &v).unwrap();

    // (-Delta)^s v_h(x_j) = (2Npi)^{-d} 2^d sum_k v_k Raw(shift = j - k)
    // with Raw over [0, N pi] after rescaling the symbol integral
    let half = n as f64 * PI;
    for j in [2usize, 4, 6] {
        let mut direct = 0.0;
        for (k, &vk) in v.data().iter().enumerate() {
            if vk == 0.0 {
                continue;
            }
            let shift = (j as f64 - k as f64) / n as f64;
            let raw = kernel::symbol_cosine_integral(1, s, &[shift], half, 1e-9).unwrap();
            direct += vk * raw * 2.0 / (2.0 * half);
        }
        assert!(
            (direct - w.data()[j]).abs() <= 1e-6 * w.data()[j].abs().max(1.0),
            "j={j}: quadrature {direct} vs operator {}",
            w.data()[j]
        );
    }
}

/// L2/energy stays bounded under refinement on a fixed domain (the discrete
/// Poincare inequality with an N-independent constant).
#[test]
fn poincare_ratio_stable_under_refinement() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(202);
    let shape = DomainShape::ball(vec![0.5], 0.45);
    let mut base_ratio = None;
    for &n in &[16usize, 32, 64, 128] {
        let kernel = assemble_kernel(1, n, frac(0.5), 16).unwrap();
        let lattice = Lattice::new(1, n).unwrap();
        let mask = build_mask(&shape, lattice).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let mut v =
                CoefficientField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0)).unwrap();
            for (lin, slot) in v.data_mut().iter_mut().enumerate() {
                if !mask.is_inside(lin) {
                    *slot = 0.0;
                }
            }
            let en = energy_norm(&kernel, &v).unwrap();
            if en > 0.0 {
                worst = worst.max(discrete_l2(&v) / en);
            }
        }
        let base = *base_ratio.get_or_insert(worst);
        assert!(
            worst <= 2.0 * base,
            "N={n}: ratio {worst} above twice the coarse value {base}"
        );
    }
}

/// The computed solution keeps the dist^s boundary decay: |u_h|/h^s at
/// strip-adjacent points stays bounded under refinement.
#[test]
fn boundary_decay_ratio_bounded() {
    let shape = DomainShape::ball(vec![0.5], 0.45);
    // d=1, s=1/2: exact solution sqrt(R^2 - (x-c)^2) with unit amplitude
    let exact = |x: &[f64]| {
        let r2 = 0.45f64 * 0.45 - (x[0] - 0.5) * (x[0] - 0.5);
        if r2 > 0.0 {
            r2.sqrt()
        } else {
            0.0
        }
    };
    let mut base = None;
    for &n in &[32usize, 64, 128, 256] {
        let kernel = Arc::new(assemble_kernel(1, n, frac(0.5), 16).unwrap());
        let lattice = Lattice::new(1, n).unwrap();
        let mask = build_mask(&shape, lattice).unwrap();
        let op = MaskedOperator::new(kernel.clone(), mask.clone()).unwrap();
        let one: ScalarFn = Arc::new(|_| 1.0);
        let rhs = sample_direct(&one, &mask).unwrap();
        let (u, _) = solve(&op, &rhs, &SolveConfig::default()).unwrap();
        let report = error_report(&kernel, &u, exact, &mask).unwrap();
        let b = *base.get_or_insert(report.boundary_decay_ratio);
        assert!(
            report.boundary_decay_ratio <= 2.0 * b,
            "N={n}: decay ratio {} vs base {b}",
            report.boundary_decay_ratio
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Kernel entries are invariant under per-axis sign flips and axis
    /// permutations, exactly as stored.
    #[test]
    fn kernel_symmetry_random_indices(m1 in 0i64..8, m2 in 0i64..8, s1 in prop::bool::ANY, s2 in prop::bool::ANY, swap in prop::bool::ANY) {
        let k = kernel_2d_n8();
        let reference = k.base_entry(&[m1, m2]);
        let a = if s1 { -m1 } else { m1 };
        let b = if s2 { -m2 } else { m2 };
        let probe = if swap { [b, a] } else { [a, b] };
        prop_assert_eq!(reference, k.base_entry(&probe));
    }

    /// fit_rate recovers exact power laws.
    #[test]
    fn fit_rate_recovers_exponent(c in 0.1f64..10.0, p in 0.1f64..2.0) {
        let pts: Vec<(f64, f64)> = [32usize, 64, 128, 256]
            .iter()
            .map(|&n| {
                let h = 1.0 / n as f64;
                (h, c * h.powf(p))
            })
            .collect();
        let fit = fit_rate(&pts).unwrap();
        prop_assert!((fit.rate - p).abs() < 1e-9);
        prop_assert!((fit.constant - c).abs() < 1e-7 * c);
    }

    /// Enlargement is monotone: every masked point stays masked.
    #[test]
    fn enlargement_monotone(rho in 0.0f64..0.04) {
        let shape = DomainShape::ball(vec![0.5], 0.4);
        let lattice = Lattice::new(1, 32).unwrap();
        let mask = build_mask(&shape, lattice).unwrap();
        let grown = enlarge_shape(&shape, rho).unwrap();
        let grown_mask = build_mask(&grown, lattice).unwrap();
        for lin in 0..lattice.num_points() {
            if mask.is_inside(lin) {
                prop_assert!(grown_mask.is_inside(lin));
            }
        }
    }

    /// discrete_l2 is absolutely homogeneous.
    #[test]
    fn discrete_l2_scaling(c in -5.0f64..5.0) {
        let lattice = Lattice::new(1, 8).unwrap();
        let v = CoefficientField::from_fn(lattice, |x| (7.0 * x[0]).sin()).unwrap();
        let scaled = CoefficientField::from_vec(
            lattice,
            v.data().iter().map(|a| c * a).collect(),
        ).unwrap();
        let lhs = discrete_l2(&scaled);
        let rhs = c.abs() * discrete_l2(&v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }
}
