//! fracsinc: solve the fractional Dirichlet problem on sinc lattices, manage
//! kernel caches, and run convergence studies.

use clap::{Parser, Subcommand};
use fracsinc_cli::{run_convergence, CliError, ProblemConfig};
use fracsinc_core::{
    assemble_kernel, build_mask, build_mollifier, build_rhs, kernel_entry_oracle, kernel_load,
    kernel_save, solve, FracOrder, Lattice, MaskedOperator, MollifierSpec,
};
use rand::{Rng, SeedableRng};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracsinc", version, about = "sinc-lattice solver for the fractional Dirichlet problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write the solution as CSV.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble a spectral kernel and write it to a cache file.
    Kernel {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = fracsinc_core::DEFAULT_OVERSAMPLE)]
        oversample: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a cached kernel against the quadrature oracle.
    ValidateKernel {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run a refinement study and write the rate table.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path; overrides the config's output.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the mollifier and write it as CSV.
    MollifierDump {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 8)]
        q: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints usage/help itself; help requests are not errors
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Solve { config, out } => cmd_solve(&config, &out),
        Command::Kernel {
            d,
            n,
            s,
            oversample,
            out,
        } => {
            let s = FracOrder::new(s).map_err(|e| CliError::Usage(e.to_string()))?;
            let kernel = assemble_kernel(d, n, s, oversample).map_err(numerical)?;
            if let Some(w) = &kernel.metadata().accuracy_warning {
                eprintln!("warning: {w}");
            }
            kernel_save(&kernel, &out).map_err(numerical)?;
            println!(
                "kernel d={d} N={n} s={} oversample={oversample} -> {}",
                s.value(),
                out.display()
            );
            Ok(())
        }
        Command::ValidateKernel { file, samples, tol } => cmd_validate(&file, samples, tol),
        Command::Converge { config, out } => {
            let cfg = ProblemConfig::load(&config)?;
            let outcome = run_convergence(&cfg)?;
            let csv_path = out
                .or(cfg.output.csv.clone())
                .unwrap_or_else(|| PathBuf::from("convergence.csv"));
            let summary_path = cfg
                .output
                .summary
                .clone()
                .unwrap_or_else(|| csv_path.with_extension("summary.txt"));
            write_file(&csv_path, &outcome.csv)?;
            write_file(&summary_path, &outcome.summary)?;
            print!("{}", outcome.summary);
            println!("wrote {} and {}", csv_path.display(), summary_path.display());
            Ok(())
        }
        Command::MollifierDump { d, epsilon, q, out } => {
            let moll = build_mollifier(
                &MollifierSpec {
                    epsilon,
                    quadrature_refinement: q,
                },
                d,
            )
            .map_err(numerical)?;
            let mut csv = String::new();
            for a in 0..d {
                csv.push_str(&format!("x{},", a + 1));
            }
            csv.push_str("eta\n");
            let count = moll.offsets().len();
            let mut idx = vec![0usize; d];
            for (lin, &v) in moll.values().iter().enumerate() {
                let mut rem = lin;
                for a in (0..d).rev() {
                    idx[a] = rem % count;
                    rem /= count;
                }
                for &i in &idx {
                    csv.push_str(&format!("{:.12e},", epsilon * moll.offsets()[i]));
                }
                // tabulated value of eta_eps includes the eps^{-d} scaling
                csv.push_str(&format!(
                    "{:.12e}\n",
                    v * epsilon.powi(-(d as i32))
                ));
            }
            write_file(&out, &csv)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn cmd_solve(config: &PathBuf, out: &PathBuf) -> Result<(), CliError> {
    let cfg = ProblemConfig::load(config)?;
    let n = *cfg.n_list.last().unwrap();
    let s = FracOrder::new(cfg.s).map_err(|e| CliError::Usage(e.to_string()))?;
    let shape = cfg.domain_shape();
    let kernel = fracsinc_cli::kernel_for(cfg.d, n, s, cfg.oversample, cfg.kernel_cache_dir.as_ref())?;
    let lattice = Lattice::new(cfg.d, n).map_err(numerical)?;
    let mask = build_mask(&shape, lattice).map_err(numerical)?;
    let op = MaskedOperator::new(kernel, mask.clone()).map_err(numerical)?;
    let rhs = build_rhs(&cfg.rhs_spec()?, &shape, &mask).map_err(numerical)?;
    let (u, report) = solve(&op, &rhs, &cfg.solve_config()).map_err(numerical)?;

    let mut csv = String::new();
    for a in 0..cfg.d {
        csv.push_str(&format!("k{},", a + 1));
    }
    for a in 0..cfg.d {
        csv.push_str(&format!("x{},", a + 1));
    }
    csv.push_str("u\n");
    let mut idx = [0usize; 3];
    let mut x = [0.0f64; 3];
    for lin in 0..lattice.num_points() {
        lattice.decode(lin, &mut idx);
        lattice.point(lin, &mut x);
        for &k in idx.iter().take(cfg.d) {
            csv.push_str(&format!("{k},"));
        }
        for &xa in x.iter().take(cfg.d) {
            csv.push_str(&format!("{xa:.12e},"));
        }
        csv.push_str(&format!("{:.12e}\n", u.data()[lin]));
    }
    write_file(out, &csv)?;
    println!(
        "solved d={} N={n} s={}: {} unknowns, {} iterations, relative residual {:.3e}",
        cfg.d,
        cfg.s,
        mask.count(),
        report.iterations,
        report.final_relative_residual
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_validate(file: &PathBuf, samples: usize, tol: f64) -> Result<(), CliError> {
    let kernel = kernel_load(file).map_err(numerical)?;
    let d = kernel.d();
    let n = kernel.n() as i64;
    let phi0 = kernel.base_entry(&vec![0; d]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let oracle_tol = (tol * 1e-2).clamp(1e-12, 1e-4);
    for i in 0..samples {
        let m: Vec<i64> = if i == 0 {
            vec![0; d]
        } else {
            (0..d).map(|_| rng.gen_range(0..n.min(64))).collect()
        };
        let oracle =
            kernel_entry_oracle(d, kernel.s(), &m, oracle_tol).map_err(numerical)?;
        let got = kernel.base_entry(&m);
        let rel = (got - oracle).abs() / oracle.abs().max(phi0);
        worst = worst.max(rel);
        println!("m={m:?}: kernel {got:.12e} oracle {oracle:.12e} rel {rel:.3e}");
    }
    if worst <= tol {
        println!("PASS: worst relative deviation {worst:.3e} <= {tol:.1e}");
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "FAIL: worst relative deviation {worst:.3e} above {tol:.1e}"
        )))
    }
}
