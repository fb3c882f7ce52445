use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssi_cli::config::RunConfig;
use ssi_cli::error::{CliError, Result};
use ssi_cli::pipeline::{self, Stage};
use ssi_cli::synth::{self, SynthConfig};

#[derive(Parser)]
#[command(
    name = "ssi",
    version,
    about = "Survey SPD moments, signal strength index and growth-at-risk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; SSI_* environment variables override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Seed for the skew-t multistart (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-histogram moments and their pooled correlations.
    Moments(Common),
    /// Forecaster signal classes and per-round class shares.
    Signal(Common),
    /// Signal strength index with interquartile bands.
    Ssi(Common),
    /// Growth-at-risk evaluation over the model grid.
    Gar(Common),
    /// Every stage in sequence.
    Replicate(Common),
    /// Write the synthetic dataset and a matching config.
    Synth {
        /// Directory for spd.csv, gdp.csv, nfci.csv and run.toml.
        #[arg(long, short, default_value = "data")]
        out: PathBuf,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        forecasters: usize,
        #[arg(long, default_value_t = 80)]
        quarters: usize,
    },
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(c.config.as_deref(), std::env::vars())?;
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let (stage, common) = match &cli.command {
        Command::Moments(c) => (Stage::Moments, c),
        Command::Signal(c) => (Stage::Signal, c),
        Command::Ssi(c) => (Stage::Ssi, c),
        Command::Gar(c) => (Stage::Gar, c),
        Command::Replicate(c) => (Stage::Replicate, c),
        Command::Synth {
            out,
            seed,
            forecasters,
            quarters,
        } => {
            if *forecasters == 0 || *quarters == 0 {
                return Err(CliError::Config(
                    "forecasters and quarters must be positive".into(),
                ));
            }
            let cfg = SynthConfig {
                seed: *seed,
                forecasters: *forecasters,
                quarters: *quarters,
                ..SynthConfig::default()
            };
            let ds = synth::write_dataset(out, &cfg)?;
            println!("wrote {}", ds.config.display());
            return Ok(());
        }
    };
    let cfg = load(common)?;
    let summary = pipeline::run(stage, &cfg)?;
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    if summary.warnings > 0 {
        eprintln!(
            "{} warning(s), see {}",
            summary.warnings,
            cfg.out_dir.join("run.log").display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
