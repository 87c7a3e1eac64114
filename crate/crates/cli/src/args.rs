use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ibandit",
    version,
    about = "Incentivized exploration with reward drift over discretized continuum-armed bandits"
)]
pub struct Cli {
    /// `key = value` config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed for every random stream.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Worker threads for trial-parallel runs.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Describe the grid cover of [0,1]^d at mesh psi.
    Cover(CoverArgs),
    /// Run stochastic episodes and write their traces.
    Run(SimArgs),
    /// Run contextual episodes and write their traces.
    Contextual(ContextualArgs),
    /// Run trial-averaged experiments and write summary (and table) CSVs.
    Experiment(ExperimentArgs),
    /// Compare the simulator with exact expectations on a Bernoulli instance.
    Oracle(OracleArgs),
    /// Render SVG plots from a summary CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub psi: f64,
    /// Lipschitz constant of the linear reward used for the gap.
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
}

/// Flags that override config-file keys.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Total dimension; split as d_a = ceil(d/2), d_x = floor(d/2) in contextual mode.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub d_a: Option<usize>,
    #[arg(long)]
    pub d_x: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Mesh size, or `auto` for the tuned mesh.
    #[arg(long)]
    pub psi: Option<String>,
    /// Multiplier of the tuned mesh.
    #[arg(long)]
    pub psi_c: Option<f64>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_interpretation: Option<NoiseKind>,
    #[arg(long)]
    pub noise_clip: Option<bool>,
    #[arg(long)]
    pub ell_low: Option<f64>,
    #[arg(long)]
    pub ell_high: Option<f64>,
    #[arg(long, value_enum)]
    pub log_mode: Option<LogKind>,
    /// Comma-separated: greedy_only, ucb_no_incentive, or none.
    #[arg(long)]
    pub baselines: Option<String>,
    #[arg(long)]
    pub bound_constant: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NoiseKind {
    Variance,
    StdDev,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LogKind {
    Round,
    Horizon,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeKind {
    Stochastic,
    Contextual,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ContextualArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Replay contexts from a CSV with one row of d_x values per round.
    #[arg(long, value_name = "PATH")]
    pub contexts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_enum)]
    pub mode: Option<ModeKind>,
    /// Grid cells as comma-separated `d:psi` pairs (psi may be `auto`).
    #[arg(long, value_name = "CELLS")]
    pub grid: Option<String>,
    /// Named grid preset.
    #[arg(long, value_enum, conflicts_with = "grid")]
    pub preset: Option<Preset>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    /// The nine-cell mesh-sensitivity grid over d = 1, 2, 3.
    MeshSensitivity,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Comma-separated Bernoulli means (at most 3 arms).
    #[arg(long, default_value = "0.9,0.1")]
    pub probs: String,
    #[arg(long, default_value_t = 0.5)]
    pub ell: f64,
    #[arg(long, default_value_t = 6)]
    pub horizon: u64,
    #[arg(long, default_value_t = 100_000)]
    pub episodes: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Summary CSV written by `experiment`.
    pub input: PathBuf,
}
