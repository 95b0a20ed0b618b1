use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::builder::PossibleValuesParser;
use clap::Parser;
use scenewalk::config::RunConfig;
use scenewalk::params::ModelVariantName;
use scenewalk::pipeline::{run, Command};

/// Fit, sample, simulate and evaluate dynamical scanpath models.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[arg(value_parser = PossibleValuesParser::new(Command::ALL.map(Command::name)))]
    command: String,
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixation CSV, overriding `data.path`.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    saliency_dir: Option<PathBuf>,
    /// Model variant name, e.g. `divisive-gamma1`.
    #[arg(long)]
    variant: Option<String>,
    /// Fit result whose optimum supplies the parameters.
    #[arg(long)]
    params_from: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(d) = cli.data {
        config.data.path = Some(d);
    }
    if let Some(d) = cli.saliency_dir {
        config.data.saliency_dir = Some(d);
    }
    if let Some(v) = &cli.variant {
        config.variant = ModelVariantName(v.parse()?);
    }
    if let Some(p) = cli.params_from {
        config.params_from = Some(p);
    }
    if cli.print_config {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global()?;
    }
    let command: Command = cli.command.parse()?;
    let report = run(command, &config).with_context(|| format!("`{command}` failed"))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
