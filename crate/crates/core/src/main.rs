use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ris_sesd::exp::{
    run_convergence_trace, run_example1, run_nmse_table, run_power_sweep, write_convergence_csv,
    write_example1_csv, write_nmse_csv, write_sweep_csv, ExperimentConfig, EXAMPLE1_FIXTURE,
};

#[derive(Parser)]
#[command(version, about = "Sphere-decoding precoding and RIS design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overrides `sweep.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV; overrides the section's `output`. Standard output when
    /// neither is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `sweep.trials`, `converge.trials` and `nmse.realizations`.
    #[arg(long, global = true)]
    trials_override: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sum rate against transmit power for each configured method.
    Sweep,
    /// Per-iteration objective and sum rate of the SESD design.
    Converge,
    /// Block-heuristic NMSE against exact sphere decoding.
    Nmse,
    /// Worked four-dimensional sphere-decoding example.
    Example1,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sweep.seed = seed;
    }
    if let Some(t) = cli.trials_override {
        cfg.sweep.trials = t;
        cfg.converge.trials = t;
        cfg.nmse.realizations = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush().with_context(|| format!("cannot write {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> Result<ExitCode> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Sweep => {
            let rows = run_power_sweep(&cfg)?;
            let out = cli.out.as_deref().or(cfg.sweep.output.as_deref());
            emit(out, |w| Ok(write_sweep_csv(&rows, w)?))?;
            let mut means: BTreeMap<(usize, &str), (f64, usize)> = BTreeMap::new();
            for r in &rows {
                let e = means.entry((r.power_index, r.method.name())).or_default();
                e.0 += r.sum_rate;
                e.1 += 1;
            }
            for ((pi, name), (sum, n)) in means {
                eprintln!("{:>6} dBm  {name:<20} mean sum rate {:.4}", cfg.sweep.powers_dbm[pi], sum / n as f64);
            }
        }
        Command::Converge => {
            let rows = run_convergence_trace(&cfg)?;
            let out = cli.out.as_deref().or(cfg.converge.output.as_deref());
            emit(out, |w| Ok(write_convergence_csv(&rows, w)?))?;
        }
        Command::Nmse => {
            let rows = run_nmse_table(&cfg)?;
            let out = cli.out.as_deref().or(cfg.nmse.output.as_deref());
            emit(out, |w| Ok(write_nmse_csv(&rows, w)?))?;
            for r in &rows {
                eprintln!("eta {:>3}  NMSE {:.5}", r.eta, r.nmse);
            }
        }
        Command::Example1 => {
            let text = match &cfg.example1.fixture {
                Some(p) => std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
                None => EXAMPLE1_FIXTURE.to_string(),
            };
            let report = run_example1(&text)?;
            let out = cli.out.as_deref().or(cfg.example1.output.as_deref());
            emit(out, |w| Ok(write_example1_csv(&report, w)?))?;
            if !report.pass() {
                for line in report.diff() {
                    eprintln!("FAIL {line}");
                }
                return Ok(ExitCode::from(1));
            }
            eprintln!("PASS x = {:?}, residual = {}", report.x, report.residual);
        }
    }
    Ok(ExitCode::SUCCESS)
}
