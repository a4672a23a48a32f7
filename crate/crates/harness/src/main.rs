use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jpeval_harness::config::load_config;
use jpeval_harness::report::{make_report, write_report_csv};
use jpeval_harness::repro::{self, ReproId};
use jpeval_harness::rows::read_results;
use jpeval_harness::runner::{run_experiment, Progress, RunOptions};
use jpeval_harness::HarnessError;

/// Scores learning agents by the quality of their joint predictive
/// distributions.
#[derive(Parser)]
#[command(name = "jpeval", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config, appending rows to its results CSV.
    Run {
        /// Path to the experiment config file.
        config: PathBuf,
        /// Worker threads (0 = default).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Replace the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the imagined-environment sample count.
        #[arg(long = "m-enn")]
        m_enn: Option<usize>,
        /// Override the output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record measured per-row seconds in the CSV (makes output bytes
        /// run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Aggregate a results CSV into a normalized report.
    Report {
        /// Results CSV produced by `run`.
        csv: PathBuf,
        /// Agent whose aggregate score defines 1.0.
        #[arg(long)]
        baseline: String,
        /// Write the plot-ready report CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named reproduction preset and check its acceptance bands.
    Repro {
        /// One of: fig1, fig2, fig4, fig5, prop1, prop2.
        id: String,
        /// Worker threads (0 = default).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Directory for the preset's results CSV.
        #[arg(long, default_value = "results/repro")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                HarnessError::Config(_) | HarnessError::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> jpeval_harness::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            jobs,
            seed,
            m_enn,
            out,
            timing,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seeds = vec![seed];
            }
            if let Some(m_enn) = m_enn {
                cfg.budget.m_enn = m_enn;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            cfg.validate()?;
            let outcome = run_experiment(
                &cfg,
                &RunOptions {
                    jobs,
                    timing_in_csv: timing,
                    progress: Progress::Always,
                },
            )?;
            eprintln!(
                "{}: wrote {} row(s), skipped {} already present, {} failed",
                cfg.out.display(),
                outcome.rows.len(),
                outcome.skipped,
                outcome.failures.len()
            );
            Ok(if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Report { csv, baseline, out } => {
            let (_, rows) = read_results(&csv)?;
            let report = make_report(&rows, &baseline)?;
            for row in &report {
                println!(
                    "{:12} {:18} raw {:9.5}  normalized {:7.4}  [{:.4}, {:.4}]",
                    row.agent, row.metric, row.raw_mean, row.normalized, row.lo95, row.hi95
                );
            }
            if let Some(out) = out {
                write_report_csv(&out, &report)?;
                eprintln!("report written to {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Repro { id, jobs, out_dir } => {
            let id: ReproId = id.parse()?;
            let (_, checks) = repro::run(
                id,
                &out_dir,
                &RunOptions {
                    jobs,
                    timing_in_csv: false,
                    progress: Progress::Always,
                },
            )?;
            println!("{}", repro::format_checks(&checks));
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
