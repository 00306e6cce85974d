mod config;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;

/// Simulate subordinators on Feller monoids and verify their identities.
#[derive(Debug, Parser)]
#[command(name = "feller", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file for the CSV or JSON report; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Failure probability per check; overrides `run.delta`.
    #[arg(long, global = true)]
    delta: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample jump points and write `replicate,jump_time,mark_repr` CSV.
    Simulate,
    /// Run one verification check, or all of them.
    Verify {
        #[arg(value_enum)]
        check: Check,
    },
    /// Compare the numeric small-jump coefficient with the analytic one.
    Alpha,
    /// Every verification check followed by `alpha`.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Lk,
    Fdd,
    Moments,
    Martingale,
    Transience,
    Convolution,
    Bochner,
    Invariance,
    SumCriterion,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs the command; `Ok(pass)` once output is written.
fn execute(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("--threads")?;
    }
    let path = cli.config.as_ref().context("--config PATH is required")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(delta) = cli.delta {
        anyhow::ensure!(delta > 0.0 && delta < 1.0, "--delta must lie in (0, 1), got {delta}");
        cfg.run.delta = delta;
    }

    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create output file {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };

    if let Command::Simulate = cli.command {
        let n = run::simulate(&cfg, &mut out)?;
        out.flush()?;
        eprintln!("wrote {n} replicates (seed {})", cfg.run.seed);
        return Ok(true);
    }

    let reports = match cli.command {
        Command::Verify { check } => run::verify(&cfg, check)?,
        Command::Alpha => run::alpha(&cfg)?,
        Command::All => {
            let mut r = run::verify(&cfg, Check::All)?;
            r.extend(run::alpha(&cfg)?);
            r
        }
        Command::Simulate => unreachable!(),
    };
    serde_json::to_writer_pretty(&mut out, &reports)?;
    writeln!(out)?;
    out.flush()?;
    for r in &reports {
        eprintln!("{}", r.table_row());
    }
    let pass = reports.iter().all(|r| r.pass);
    eprintln!(
        "{} of {} checks passed (seed {})",
        reports.iter().filter(|r| r.pass).count(),
        reports.len(),
        cfg.run.seed
    );
    Ok(pass)
}
