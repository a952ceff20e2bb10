//! The refinement study: assemble or load kernels, solve on each lattice in
//! the list, compare against the reference solution, and fit rates.

use crate::config::{ProblemConfig, ReferenceMode};
use crate::exact::BallExactSolution;
use crate::{CliError, ShapeConfig};
use fracsinc_core::{
    assemble_kernel, build_mask, error_report, fit_rate, fit_rate_log_corrected, kernel_load,
    kernel_save, solve, CoefficientField, ErrorReport, FracOrder, Lattice, MaskedOperator,
    RateFit, SpectralKernel,
};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ColumnFit {
    pub column: &'static str,
    pub plain: Option<RateFit>,
    /// Exponent p of the model C |log h| h^p, which is what the convergence
    /// theory predicts for the energy error.
    pub log_corrected: Option<RateFit>,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub rows: Vec<ErrorReport>,
    /// Fits for the l2, linf and energy columns, in that order.
    pub fits: Vec<ColumnFit>,
    pub csv: String,
    pub summary: String,
}

impl ConvergenceOutcome {
    pub fn energy_fit(&self) -> &ColumnFit {
        &self.fits[2]
    }
}

fn numerical<E: std::fmt::Display>(stage: &str, n: usize) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Numerical(format!("{stage} failed at N = {n}: {e}"))
}

/// Fetch the kernel from the cache directory, assembling and caching on miss.
pub fn kernel_for(
    d: usize,
    n: usize,
    s: FracOrder,
    oversample: u32,
    cache_dir: Option<&PathBuf>,
) -> Result<Arc<SpectralKernel>, CliError> {
    if let Some(dir) = cache_dir {
        let path = dir.join(format!(
            "fracsinc_d{d}_n{n}_s{}_os{oversample}.fsk",
            s.value()
        ));
        if path.exists() {
            if let Ok(k) = kernel_load(&path) {
                if k.d() == d && k.n() == n && k.s() == s && k.oversample() == oversample {
                    return Ok(Arc::new(k));
                }
            }
        }
        let kernel = assemble_kernel(d, n, s, oversample).map_err(numerical("kernel", n))?;
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Numerical(format!("kernel cache write failed: {e}")))?;
        kernel_save(&kernel, &path)
            .map_err(|e| CliError::Numerical(format!("kernel cache write failed: {e}")))?;
        return Ok(Arc::new(kernel));
    }
    Ok(Arc::new(
        assemble_kernel(d, n, s, oversample).map_err(numerical("kernel", n))?,
    ))
}

pub fn run_convergence(cfg: &ProblemConfig) -> Result<ConvergenceOutcome, CliError> {
    cfg.validate()?;
    let s = FracOrder::new(cfg.s).map_err(|e| CliError::Usage(e.to_string()))?;
    let shape = cfg.domain_shape();
    let reference = cfg.reference_mode();

    if reference == ReferenceMode::SelfConvergence {
        let finest = *cfg.n_list.last().unwrap();
        if cfg.n_list.iter().any(|&n| finest % n != 0) {
            return Err(CliError::Usage(
                "self-convergence needs nested N values (each dividing the finest)".into(),
            ));
        }
    }

    // solve every resolution first
    let mut solutions: Vec<(usize, Arc<SpectralKernel>, CoefficientField)> = Vec::new();
    for &n in &cfg.n_list {
        let kernel = kernel_for(cfg.d, n, s, cfg.oversample, cfg.kernel_cache_dir.as_ref())?;
        let lattice = Lattice::new(cfg.d, n).map_err(numerical("lattice", n))?;
        let mask = build_mask(&shape, lattice).map_err(numerical("mask", n))?;
        let op = MaskedOperator::new(kernel.clone(), mask.clone())
            .map_err(numerical("operator", n))?;
        let rhs_spec = cfg.rhs_spec()?;
        let rhs = fracsinc_core::build_rhs(&rhs_spec, &shape, &mask)
            .map_err(numerical("rhs", n))?;
        let (u, _report) = solve(&op, &rhs, &cfg.solve_config()).map_err(numerical("solve", n))?;
        solutions.push((n, kernel, u));
    }

    // error rows against the chosen reference
    let mut rows = Vec::new();
    match reference {
        ReferenceMode::BallExact => {
            let (center, radius) = match &cfg.shape {
                ShapeConfig::Ball { center, radius } => (center.clone(), *radius),
                _ => {
                    return Err(CliError::Usage(
                        "ball-exact reference needs a ball shape".into(),
                    ))
                }
            };
            let exact = BallExactSolution::new(center, radius, cfg.s);
            for (n, kernel, u) in &solutions {
                let lattice = Lattice::new(cfg.d, *n).unwrap();
                let mask = build_mask(&shape, lattice).map_err(numerical("mask", *n))?;
                let report = error_report(kernel, u, |x| exact.eval(x), &mask)
                    .map_err(numerical("error-report", *n))?;
                rows.push(report);
            }
        }
        ReferenceMode::SelfConvergence => {
            let (n_fine, _, u_fine) = solutions.last().unwrap().clone();
            let fine_lattice = Lattice::new(cfg.d, n_fine).unwrap();
            let lookup = move |x: &[f64]| {
                let mut idx = [0usize; 3];
                for (a, &xa) in x.iter().enumerate() {
                    idx[a] = (xa * n_fine as f64).round() as usize % n_fine;
                }
                u_fine.data()[fine_lattice.encode(&idx[..x.len()])]
            };
            for (n, kernel, u) in solutions.iter().take(solutions.len() - 1) {
                let lattice = Lattice::new(cfg.d, *n).unwrap();
                let mask = build_mask(&shape, lattice).map_err(numerical("mask", *n))?;
                let report = error_report(kernel, u, &lookup, &mask)
                    .map_err(numerical("error-report", *n))?;
                rows.push(report);
            }
        }
    }

    let fits = fit_columns(&rows);
    let csv = render_csv(&rows);
    let summary = render_summary(cfg, reference, &rows, &fits);
    Ok(ConvergenceOutcome {
        rows,
        fits,
        csv,
        summary,
    })
}

fn fit_columns(rows: &[ErrorReport]) -> Vec<ColumnFit> {
    let columns: [(&'static str, fn(&ErrorReport) -> f64); 3] = [
        ("l2", |r| r.l2_grid_error),
        ("linf", |r| r.linf_grid_error),
        ("energy", |r| r.energy_error),
    ];
    columns
        .iter()
        .map(|(name, get)| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, get(r))).collect();
            if pts.len() < 3 {
                return ColumnFit {
                    column: name,
                    plain: None,
                    log_corrected: None,
                    note: Some("insufficient points".into()),
                };
            }
            match (fit_rate(&pts), fit_rate_log_corrected(&pts)) {
                (Ok(p), Ok(l)) => ColumnFit {
                    column: name,
                    plain: Some(p),
                    log_corrected: Some(l),
                    note: None,
                },
                (Err(e), _) | (_, Err(e)) => ColumnFit {
                    column: name,
                    plain: None,
                    log_corrected: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn render_csv(rows: &[ErrorReport]) -> String {
    let mut out = String::from(ErrorReport::csv_header());
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

fn render_summary(
    cfg: &ProblemConfig,
    reference: ReferenceMode,
    rows: &[ErrorReport],
    fits: &[ColumnFit],
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "convergence study: d={} s={} rhs={}/{:?} reference={:?}\n",
        cfg.d, cfg.s, cfg.rhs.f, cfg.rhs.mode, reference
    ));
    out.push_str(&format!("{:>6} {:>12} {:>14} {:>14} {:>14}\n", "N", "h", "l2", "linf", "energy"));
    for r in rows {
        out.push_str(&format!(
            "{:>6} {:>12.6e} {:>14.6e} {:>14.6e} {:>14.6e}\n",
            r.n, r.h, r.l2_grid_error, r.linf_grid_error, r.energy_error
        ));
    }
    out.push_str("fitted rates (power law / log-corrected model):\n");
    for f in fits {
        match (&f.plain, &f.log_corrected) {
            (Some(p), Some(l)) => out.push_str(&format!(
                "  {:>7}: rate {:.4} (C = {:.4e})   log-corrected p {:.4} (C = {:.4e})\n",
                f.column, p.rate, p.constant, l.rate, l.constant
            )),
            _ => out.push_str(&format!(
                "  {:>7}: {}\n",
                f.column,
                f.note.as_deref().unwrap_or("unavailable")
            )),
        }
    }
    out
}
