use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use revchain_core::experiments::{count_matrix, langevin_trajectory, run_benchmark, BenchmarkConfig, LangevinConfig};
use revchain_core::mtx::{read_matrix_file, read_pattern_file, read_vector_file, write_matrix};
use revchain_core::sparse::row_normalize;
use revchain_core::{
    kolmogorov_cycle_check, nearest_sparse_reversible, reversibilize, stationary_distribution, verify,
    AcceptanceRule, CycleVerdict, PipelineOptions, ProbabilityVector, SolverOptions, SolverVariant,
    SparseMatrix, SparseStochasticMatrix, StationarySolveOptions,
};

/// Residual level above which a result counts as failing verification.
const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "revchain", version, about = "Nearest sparse reversible Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nearest reversible chain on the symmetrized sparsity pattern.
    Nearest {
        matrix: PathBuf,
        /// Stationary distribution to preserve, one value per line.
        #[arg(long)]
        pi: Option<PathBuf>,
        /// Admissible pattern as a Matrix Market file.
        #[arg(long)]
        pattern: Option<PathBuf>,
        /// Solve the support of pi as one block.
        #[arg(long)]
        no_recurse: bool,
        #[arg(long, value_enum, default_value_t = Solver::Ip)]
        solver: Solver,
        /// KKT tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Output matrix; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Diagnostics JSON.
        #[arg(long)]
        diag: Option<PathBuf>,
    },
    /// Metropolis-Hastings (or Barker) reversibilization of the matrix.
    Mh {
        matrix: PathBuf,
        #[arg(long)]
        pi: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Rule::Mh)]
        rule: Rule,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of a chain against a distribution.
    Check {
        matrix: PathBuf,
        #[arg(long)]
        pi: PathBuf,
        /// Also test the Kolmogorov criterion on cycles up to this length.
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Random sparse chain benchmark.
    Bench {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        nmin: usize,
        #[arg(long, default_value_t = 300)]
        nmax: usize,
        #[arg(long, default_value_t = 5.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file, JSON when the extension is `.json`, CSV otherwise;
        /// CSV on stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Butane-like Langevin simulation and transition counts.
    Langevin {
        #[arg(long, default_value_t = 50_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Count matrix; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Row-normalized transition matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Ip,
    Pg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Mh,
    Barker,
}

/// Whether the produced result passed verification.
enum Outcome {
    Verified,
    Rejected,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Verified) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Nearest {
            matrix,
            pi,
            pattern,
            no_recurse,
            solver,
            tol,
            out,
            diag,
        } => {
            let p = read_stochastic(&matrix)?;
            let options = PipelineOptions {
                pi: pi.as_deref().map(read_distribution).transpose()?,
                pattern: pattern
                    .as_deref()
                    .map(|path| read_pattern_file(path).with_context(|| format!("reading {}", path.display())))
                    .transpose()?,
                recurse_ergodic: !no_recurse,
                solver: SolverOptions {
                    kkt_tolerance: tol,
                    variant: match solver {
                        Solver::Ip => SolverVariant::InteriorPoint,
                        Solver::Pg => SolverVariant::ProjectedGradient,
                    },
                    ..SolverOptions::default()
                },
                ..PipelineOptions::default()
            };
            let (r, diagnostics) = nearest_sparse_reversible(&p, &options)?;
            emit_matrix(&r, out.as_deref())?;
            if let Some(path) = diag {
                std::fs::write(&path, diagnostics.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
            let res = diagnostics.residuals;
            eprintln!(
                "classes {}, transient {}, ||Delta||_F = {:.6e}, MH distance = {:.6e}, nnz {} -> {}",
                diagnostics.num_classes,
                diagnostics.transient.len(),
                diagnostics.delta_frobenius,
                diagnostics.mh_baseline_distance,
                diagnostics.nnz_p,
                diagnostics.nnz_r
            );
            eprintln!(
                "residuals: stochasticity {:.3e}, detailed balance {:.3e}, stationarity {:.3e}",
                res.stochasticity, res.detailed_balance, res.stationarity
            );
            Ok(verdict(res.max() <= VERIFY_TOLERANCE))
        }
        Command::Mh { matrix, pi, rule, out } => {
            let p = read_stochastic(&matrix)?;
            let pi = match pi {
                Some(path) => read_distribution(&path)?,
                None => stationary_distribution(&p, &StationarySolveOptions::default())?,
            };
            let rule = match rule {
                Rule::Mh => AcceptanceRule::MetropolisHastings,
                Rule::Barker => AcceptanceRule::Barker,
            };
            let t = reversibilize(&p, pi.as_slice(), rule)?;
            emit_matrix(&t, out.as_deref())?;
            let res = verify(&t, pi.as_slice())?;
            eprintln!(
                "distance {:.6e}; residuals: stochasticity {:.3e}, detailed balance {:.3e}, stationarity {:.3e}",
                revchain_core::frobenius_distance(&t, &p)?,
                res.stochasticity,
                res.detailed_balance,
                res.stationarity
            );
            Ok(verdict(res.max() <= VERIFY_TOLERANCE))
        }
        Command::Check { matrix, pi, cycles } => {
            let p = read_matrix_file(&matrix).with_context(|| format!("reading {}", matrix.display()))?;
            let pi = read_distribution(&pi)?;
            let res = verify(&p, pi.as_slice())?;
            println!("stochasticity {:e}", res.stochasticity);
            println!("detailed_balance {:e}", res.detailed_balance);
            println!("stationarity {:e}", res.stationarity);
            let mut ok = res.max() <= VERIFY_TOLERANCE;
            if let Some(length) = cycles {
                match kolmogorov_cycle_check(&p, length) {
                    CycleVerdict::ReversibleUpToLength(l) => println!("cycles balanced up to length {l}"),
                    CycleVerdict::Violation { cycle, forward, reverse } => {
                        println!("cycle {cycle:?} unbalanced: forward {forward:e}, reverse {reverse:e}");
                        ok = false;
                    }
                }
            }
            Ok(verdict(ok))
        }
        Command::Bench {
            n,
            nmin,
            nmax,
            alpha,
            seed,
            out,
        } => {
            let cfg = BenchmarkConfig {
                num_cases: n,
                n_min: nmin,
                n_max: nmax,
                alpha,
                seed,
            };
            let report = run_benchmark(&cfg, &PipelineOptions::default())?;
            match out.as_deref() {
                Some(path) if path.extension().is_some_and(|e| e == "json") => {
                    std::fs::write(path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?
                }
                Some(path) => report.write_csv(create(path)?)?,
                None => report.write_csv(io::stdout().lock())?,
            }
            let failed = report.failures().count();
            let worst = report
                .records
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.residuals.max())
                .fold(0.0, f64::max);
            let dominated = report
                .records
                .iter()
                .filter(|r| r.error.is_none())
                .all(|r| r.delta_frobenius <= r.mh_distance);
            eprintln!(
                "{} cases in {:.2} s, {failed} failed, worst residual {worst:.2e}, Delta <= MH on all cases: {dominated}",
                report.records.len(),
                report.total_seconds
            );
            if failed > 0 {
                anyhow::bail!("{failed} benchmark case(s) failed");
            }
            Ok(verdict(worst <= VERIFY_TOLERANCE))
        }
        Command::Langevin {
            steps,
            bins,
            dt,
            sigma,
            seed,
            out,
            matrix,
        } => {
            let cfg = LangevinConfig {
                steps,
                bins,
                dt,
                sigma,
                seed,
                ..LangevinConfig::butane()
            };
            let counts = count_matrix(langevin_trajectory(&cfg)?, cfg.bins)?;
            emit_matrix(&counts, out.as_deref())?;
            if let Some(path) = matrix {
                let p = row_normalize(&counts).context("trajectory did not leave every bin; increase --steps")?;
                write_matrix(&p, create(&path)?)?;
            }
            Ok(Outcome::Verified)
        }
    }
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Verified
    } else {
        Outcome::Rejected
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn read_stochastic(path: &Path) -> Result<SparseStochasticMatrix> {
    let m = read_matrix_file(path).with_context(|| format!("reading {}", path.display()))?;
    SparseStochasticMatrix::new(m).with_context(|| format!("{} is not a stochastic matrix", path.display()))
}

fn read_distribution(path: &Path) -> Result<ProbabilityVector> {
    let values = read_vector_file(path).with_context(|| format!("reading {}", path.display()))?;
    ProbabilityVector::new(values).with_context(|| format!("{} is not a probability vector", path.display()))
}

fn emit_matrix(m: &SparseMatrix, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_matrix(m, create(path)?)?,
        None => {
            let mut stdout = io::stdout().lock();
            write_matrix(m, &mut stdout)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
