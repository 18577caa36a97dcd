use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use savark_harness::config::parse_list;
use savark_harness::converge::{self, Reference};
use savark_harness::output::write_atomic;
use savark_harness::{audit, equiv, run, HarnessError, RunConfig, SnapshotFormat};

/// SAV additive Runge-Kutta experiments.
///
/// Exit codes: 0 success, 2 configuration error, 3 solver failure.
#[derive(Parser)]
#[command(name = "savark", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write manifest, energy series and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot format: savf or csv (overrides output.format).
        #[arg(long)]
        format: Option<String>,
    },
    /// Temporal refinement study; prints the convergence table as CSV.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated time steps.
        #[arg(long)]
        dt: String,
        /// `manufactured` or `fine:TAU[:SCHEME[:REFINE]]`.
        #[arg(long)]
        reference: String,
        /// Comma-separated scheme names (default: scheme.name).
        #[arg(long)]
        schemes: Option<String>,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit every built-in tableau pair.
    Audit {
        /// Directory for audit.txt and audit.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare prediction-correction with its four-tableau form.
    Equiv {
        #[arg(long)]
        base: String,
        #[arg(long)]
        sweeps: usize,
        #[arg(long)]
        model: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, out, format } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(f) = format {
                cfg.output.format = SnapshotFormat::parse(&f)?;
            }
            let summary = run::run(&cfg, out.as_deref())?;
            println!(
                "{} steps, {} snapshots, max relative energy change {:e}; output in {}",
                summary.steps,
                summary.snapshots.len(),
                summary.max_relative_energy_increase,
                summary.dir.display()
            );
        }
        Command::Converge {
            config,
            dt,
            reference,
            schemes,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let dts = parse_list(&dt)?;
            let reference = Reference::parse(&reference)?;
            let schemes: Vec<String> = schemes
                .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
                .unwrap_or_default();
            let rows = converge::converge(&cfg, &schemes, &dts, &reference)?;
            let csv = converge::to_csv(&rows);
            print!("{csv}");
            if let Some(path) = out {
                write_atomic(&path, csv.as_bytes())?;
            }
        }
        Command::Audit { out } => {
            let rows = audit::audit_tableaux();
            let text = audit::to_text(&rows);
            print!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
                write_atomic(&dir.join("audit.txt"), text.as_bytes())?;
                write_atomic(&dir.join("audit.csv"), audit::to_csv(&rows).as_bytes())?;
            }
        }
        Command::Equiv {
            base,
            sweeps,
            model,
            steps,
            n,
            dt,
        } => {
            let r = equiv::equivalence_check(&base, sweeps, &model, steps, n, dt)?;
            println!(
                "{} M={} on {} (N={}, dt={:e}, {} steps): deviation u {:.3e}, q {:.3e} -> {}",
                r.base,
                r.sweeps,
                r.model,
                r.n,
                r.dt,
                r.steps,
                r.deviation_u,
                r.deviation_q,
                if r.passed() { "PASS" } else { "FAIL" }
            );
            if !r.passed() {
                return Err(HarnessError::Solver(savark_core::Error::InvalidParameter(format!(
                    "deviation {:e} above {:e}",
                    r.deviation(),
                    equiv::PASS_THRESHOLD
                ))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
