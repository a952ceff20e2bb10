//! Benchmark-only crate; see `benches/solver.rs`.

/// Shared setup for the benchmarks: the d=2 ball problem at a given N.
pub fn ball_problem(
    d: usize,
    n: usize,
    s: f64,
) -> (
    std::sync::Arc<fracsinc_core::SpectralKernel>,
    fracsinc_core::MaskedOperator,
    fracsinc_core::CoefficientField,
) {
    use fracsinc_core::*;
    let kernel = std::sync::Arc::new(
        assemble_kernel(d, n, FracOrder::new(s).unwrap(), 4).unwrap(),
    );
    let lattice = Lattice::new(d, n).unwrap();
    let mask = build_mask(&DomainShape::ball(vec![0.5; d], 0.45), lattice).unwrap();
    let op = MaskedOperator::new(kernel.clone(), mask.clone()).unwrap();
    let one: ScalarFn = std::sync::Arc::new(|_: &[f64]| 1.0);
    let rhs = sample_direct(&one, &mask).unwrap();
    (kernel, op, rhs)
}
