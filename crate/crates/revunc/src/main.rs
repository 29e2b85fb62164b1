//! Command-line driver for the revision-uncertainty pipeline.
//!
//! Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure,
//! 4 missing upstream artifact.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use revunc::fixture::FixtureOptions;
use revunc::pipeline::{run_pipeline, run_stage, RunConfig, Stage};
use revunc::Error;

#[derive(Parser)]
#[command(
    name = "revunc",
    about = "Macroeconomic uncertainty from GDP revision news: estimation, indexes, impulse responses",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "revunc.toml")]
    config: PathBuf,

    /// Comma-separated country codes (overrides the config).
    #[arg(long, global = true, value_delimiter = ',')]
    countries: Vec<String>,

    /// Base RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 = one per core (overrides the config).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Re-run stages even when their outputs are up to date.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse vintage triangles into first/final release panels.
    Ingest(CommonArgs),
    /// Run the Gibbs samplers and persist posterior draws.
    Estimate(CommonArgs),
    /// Build per-country uncertainty indexes from the draws.
    Index(CommonArgs),
    /// Estimate impulse responses to uncertainty shocks.
    Var(CommonArgs),
    /// Aggregate country indexes into global and rigidity-group indexes.
    Global(CommonArgs),
    /// Render SVG charts from the pipeline outputs.
    Report(CommonArgs),
    /// Run the whole pipeline, or a single named stage.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Run only this stage (ingest, estimate, index, var, global, report).
        #[arg(long)]
        stage: Option<String>,
    },
    /// Generate a small synthetic dataset plus a ready-to-run config.
    Fixture {
        /// Directory to write the dataset into.
        #[arg(long, default_value = "fixture")]
        dir: PathBuf,
        /// Number of reference quarters to simulate.
        #[arg(long, default_value_t = 72)]
        quarters: usize,
        /// Base RNG seed for the simulation.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    if !common.countries.is_empty() {
        cfg.data.countries = common.countries.clone();
    }
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(jobs) = common.jobs {
        cfg.run.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(c) => run_stage(&load_config(&c)?, Stage::Ingest, c.force),
        Command::Estimate(c) => run_stage(&load_config(&c)?, Stage::Estimate, c.force),
        Command::Index(c) => run_stage(&load_config(&c)?, Stage::Index, c.force),
        Command::Var(c) => run_stage(&load_config(&c)?, Stage::Var, c.force),
        Command::Global(c) => run_stage(&load_config(&c)?, Stage::Global, c.force),
        Command::Report(c) => run_stage(&load_config(&c)?, Stage::Report, c.force),
        Command::Run { common, stage } => {
            let cfg = load_config(&common)?;
            match stage {
                Some(name) => run_stage(&cfg, name.parse()?, common.force),
                None => run_pipeline(&cfg, common.force),
            }
        }
        Command::Fixture { dir, quarters, seed } => {
            let mut opts = FixtureOptions { n_quarters: quarters, ..Default::default() };
            if let Some(s) = seed {
                opts.seed = s;
            }
            revunc::fixture::generate(&dir, &opts)?;
            println!("fixture written to {}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
