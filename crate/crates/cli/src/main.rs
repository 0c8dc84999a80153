//! Command-line experiment harness: synthesize far-field data, invert data
//! files, ingest measurement tables, and run the validation suite, all
//! driven by a TOML configuration.

mod config;
mod run;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{Config, Mode};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "invscat",
    about = "Electromagnetic inverse scattering: forward synthesis and sampling-method reconstruction",
    version
)]
struct Cli {
    /// Worker threads for the data-parallel stages (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the noise seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "invscat-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the direct problem and write synthetic far-field data.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reconstruct an indicator volume from a far-field data file.
    Invert {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Ingest a measurement table and reconstruct from it.
    Fresnel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run the property self-checks and write a machine-readable report.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = Config::from_toml(&text)?;
    if let Some(seed) = seed {
        cfg.noise.seed = seed;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring worker pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.workers.is_some() {
        eprintln!("note: built without the parallel feature; --workers ignored");
    }

    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))?;

    let summary = match &cli.command {
        Command::Synthesize { config } => {
            let cfg = load_config(config, cli.seed)?;
            run::Summary::check_mode(&cfg, Mode::Synthesize)?;
            run::run_synthesize(&cfg, &cli.out)?
        }
        Command::Invert { config, data } => {
            let cfg = load_config(config, cli.seed)?;
            run::Summary::check_mode(&cfg, Mode::Invert)?;
            run::run_invert(&cfg, data, &cli.out)?
        }
        Command::Fresnel { config, dataset } => {
            let cfg = load_config(config, cli.seed)?;
            run::Summary::check_mode(&cfg, Mode::Fresnel)?;
            run::run_fresnel(&cfg, dataset, &cli.out)?
        }
        Command::Validate { config } => {
            let cfg = load_config(config, cli.seed)?;
            run::Summary::check_mode(&cfg, Mode::Validate)?;
            let summary = run::run_validate(&cfg, &cli.out)?;
            for row in &summary.checks {
                println!(
                    "{} {} - {}",
                    if row.pass { "PASS" } else { "FAIL" },
                    row.name,
                    row.detail
                );
            }
            summary
        }
    };

    println!(
        "{}: {} (outputs in {})",
        summary.mode,
        if summary.ok { "ok" } else { "FAILED" },
        cli.out.display()
    );
    if !summary.ok {
        std::process::exit(1);
    }
    Ok(())
}
