//! Library behind the `hoverbeam` binary: argument parsing, config
//! loading, the experiment runners, and artifact output.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use hoverbeam_core::{load_config, ConfigError, ScenarioConfig};
use thiserror::Error;

pub mod commands;
mod output;

pub use output::{Manifest, Output, MANIFEST_FILE};

/// Seeded experiment runner for hovering UAV swarm beamforming.
#[derive(Debug, Clone, Parser)]
#[command(name = "hoverbeam", version, about)]
pub struct Cli {
    /// Scenario configuration (JSON).
    #[arg(long, global = true, env = "HOVERBEAM_CONFIG")]
    pub config: Option<PathBuf>,

    /// Overrides the seed stored in the configuration.
    #[arg(long, global = true, env = "HOVERBEAM_SEED")]
    pub seed: Option<u64>,

    /// Directory that receives the artifacts.
    #[arg(long, global = true, env = "HOVERBEAM_OUT", default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "HOVERBEAM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Received power and phase versus common pitch and roll.
    HoverMap,
    /// Ideal and displaced pattern cuts plus Monte Carlo distortion.
    DisplacementPattern,
    /// Broadside pattern cuts for several element spacings.
    AoaSweep,
    /// Interference-plus-noise level over a horizontal plane.
    Heatmap,
    /// Correlation between pairwise distance and fading amplitude.
    Pearson,
    /// Exhaustive interference-aware subset selection.
    Select,
    /// Trains the beam re-forming agent on the selected subset.
    Train {
        /// Hover tolerance as a fraction of the UAV spacing.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Compares trained and untrained re-forming on held-out hover draws.
    ReformEval {
        /// Checkpoint to evaluate; defaults to `qnet.json` in the output
        /// directory when its config hash matches, else trains afresh.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::HoverMap => "hover-map",
            Command::DisplacementPattern => "displacement-pattern",
            Command::AoaSweep => "aoa-sweep",
            Command::Heatmap => "heatmap",
            Command::Pearson => "pearson",
            Command::Select => "select",
            Command::Train { .. } => "train",
            Command::ReformEval { .. } => "reform-eval",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("missing --config (or HOVERBEAM_CONFIG)")]
    MissingConfig,

    #[error(transparent)]
    Core(#[from] hoverbeam_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot read checkpoint {path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::MissingConfig => 2,
            _ => 3,
        }
    }
}

/// Loaded configuration with the command-line seed applied.
#[derive(Debug, Clone)]
pub struct Effective {
    pub config: ScenarioConfig,
}

impl Effective {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }
}

pub fn effective_config(cli: &Cli) -> Result<Effective, RunError> {
    let path = cli.config.as_ref().ok_or(RunError::MissingConfig)?;
    let mut config = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(Effective { config })
}

/// Runs one subcommand and writes its artifacts plus `manifest.json`.
pub fn run(cli: &Cli) -> Result<Manifest, RunError> {
    let started = Instant::now();
    let mut eff = effective_config(cli)?;
    if let Command::Train { tolerance: Some(t) } = cli.command {
        eff.config.hover.tolerance_fraction = Some(t);
        eff.config.validate()?;
    }
    let mut out = Output::create(&cli.out)?;
    let cfg = &eff.config;
    match &cli.command {
        Command::HoverMap => commands::hover_map(cfg, &mut out)?,
        Command::DisplacementPattern => commands::displacement_pattern(cfg, &mut out)?,
        Command::AoaSweep => commands::aoa_sweep(cfg, &mut out)?,
        Command::Heatmap => commands::heatmap(cfg, &mut out)?,
        Command::Pearson => commands::pearson(cfg, &mut out)?,
        Command::Select => commands::select(cfg, &mut out)?,
        Command::Train { .. } => commands::train(cfg, &mut out)?,
        Command::ReformEval { checkpoint } => {
            commands::reform_eval(cfg, checkpoint.as_deref(), &mut out)?
        }
    }
    out.finish(cli.command.name(), cfg, started.elapsed().as_secs_f64())
}
