//! Command-line pipeline: simulate torques, fit regressors, predict
//! composite torques, optimize wrist axes and summarize kinematics.
//!
//! Every command reads one TOML config, writes into `--out` and is a pure
//! function of its config, inputs and seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod format;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod svg;
pub mod synthetic;

use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::PipelineConfig;

/// Validation errors exit with 2, runtime errors with 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn validation(e: impl Display) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn runtime(e: impl Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "adlreq",
    version,
    about = "Prosthesis requirements from ADL joint trajectories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for synthetic trials; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record wall-clock stage timings in the manifest.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inverse dynamics over the model stack and task objects.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory CSV files, added to those in the config.
        trajectories: Vec<PathBuf>,
    },
    /// Fit percentile regressors to a record store.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Record store; defaults to `<out>/records`.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Predict composite peak torques from a coefficient table.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// Coefficient table; defaults to `<out>/coefficients.csv`.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Percentile to predict (0 or 100); repeatable.
        #[arg(long = "percentile")]
        percentiles: Vec<u8>,
        /// Term `joint/task/body=scalar`, e.g. `EF/I/Hand=0.5`; repeatable.
        #[arg(long = "component")]
        components: Vec<String>,
    },
    /// Optimize wrist actuation axes.
    OptimizeWrist {
        #[command(flatten)]
        common: CommonArgs,
        /// Record store; defaults to `<out>/records`.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Sample CSV with q_WF,q_WD,tau_WF,tau_WD,nu_WF,nu_WD columns.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Comma-separated drive kinds; replaces the config list.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
    },
    /// Angle and velocity statistics of trajectories.
    Summarize {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory CSV files, added to those in the config.
        trajectories: Vec<PathBuf>,
    },
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate { common, .. }
            | Command::Fit { common, .. }
            | Command::Predict { common, .. }
            | Command::OptimizeWrist { common, .. }
            | Command::Summarize { common, .. } => common,
        }
    }
}

/// Loaded configuration with the run context shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub config_dir: PathBuf,
    pub config_sha256: String,
    pub seed: u64,
    pub out: PathBuf,
    pub timing: bool,
}

impl Context {
    pub fn load(args: &CommonArgs) -> Result<Self, CliError> {
        let (config, config_dir, bytes) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
                let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
                (PipelineConfig::from_toml(&text, &dir)?, dir, text.into_bytes())
            }
            None => (PipelineConfig::default(), PathBuf::from("."), Vec::new()),
        };
        let seed = args.seed.unwrap_or(config.seed);
        Ok(Context {
            config,
            config_dir,
            config_sha256: io::sha256_hex(&bytes),
            seed,
            out: args.out.clone(),
            timing: args.timing,
        })
    }

    pub fn manifest(&self, command: &str) -> manifest::RunManifest {
        manifest::RunManifest::new(command, self.seed, self.config_sha256.clone(), self.timing)
    }

    /// Roots used to shorten paths in manifests.
    pub fn roots(&self) -> [&Path; 2] {
        [self.out.as_path(), self.config_dir.as_path()]
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::load(cli.command.common())?;
    match cli.command {
        Command::Simulate { trajectories, .. } => commands::simulate(&ctx, &trajectories),
        Command::Fit { records, .. } => commands::fit(&ctx, records.as_deref()),
        Command::Predict {
            table,
            percentiles,
            components,
            ..
        } => commands::predict(&ctx, table.as_deref(), &percentiles, &components),
        Command::OptimizeWrist {
            records,
            samples,
            kinds,
            ..
        } => commands::optimize_wrist(&ctx, records.as_deref(), samples.as_deref(), kinds.as_deref()),
        Command::Summarize { trajectories, .. } => commands::summarize(&ctx, &trajectories),
    }
}

/// Parses `args` (without the program name) and runs the command.
pub fn run_args<I, S>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("adlreq")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(CliError::validation)?;
    run(cli)
}
