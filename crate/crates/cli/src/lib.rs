//! Command-line driver for the summarization pipeline.
//!
//! Each stage reads the previous stage's files from the output directory,
//! so stages can be rerun independently; `all` chains them.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use disco_core::client::ClientError;

pub use commands::{cmd_all, cmd_analyze, cmd_extract, cmd_prompts, cmd_report, cmd_stats, cmd_summarize};
pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CLIENT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "disco", version, about = "Expectation-based review summarization")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract aspect mentions from reviews into the mention cache.
    Extract,
    /// Build domain references, divergence profiles and chart data.
    Analyze,
    /// Assemble disco and baseline prompts per accommodation.
    Prompts,
    /// Generate summaries from the prompt files.
    Summarize,
    /// Write the Markdown run report.
    Report,
    /// Analyze a ratings CSV.
    Stats { ratings: PathBuf },
    /// Run extract, analyze, prompts, summarize and report in order.
    All,
}

/// Flags layered over the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub domain: Option<String>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Offline extraction and summaries; no network.
    #[arg(long, global = true)]
    pub mock: bool,
    #[arg(long, global = true)]
    pub leave_one_out: bool,
    /// Fail on the first malformed review line.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub reviews: Option<PathBuf>,
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub base_url: Option<String>,
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(seed, k, epsilon, out, model, base_url, concurrency);
        if self.domain.is_some() {
            cfg.domain = self.domain.clone();
        }
        if self.reviews.is_some() {
            cfg.reviews = self.reviews.clone();
        }
        if self.taxonomy.is_some() {
            cfg.taxonomy = self.taxonomy.clone();
        }
        if self.lexicon.is_some() {
            cfg.lexicon = self.lexicon.clone();
        }
        cfg.mock |= self.mock;
        cfg.leave_one_out |= self.leave_one_out;
        cfg.strict |= self.strict;
        Ok(cfg)
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_USAGE;
        }
        if cause.is::<ClientError>() {
            return EXIT_CLIENT;
        }
        if let Some(e) = cause.downcast_ref::<disco_core::Error>() {
            return match e {
                disco_core::Error::Client(_) | disco_core::Error::EmptyOutput => EXIT_CLIENT,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.overrides.resolve()?;
    match &cli.command {
        Command::Extract => {
            cmd_extract(&cfg)?;
        }
        Command::Analyze => {
            cmd_analyze(&cfg)?;
        }
        Command::Prompts => {
            cmd_prompts(&cfg)?;
        }
        Command::Summarize => {
            cmd_summarize(&cfg)?;
        }
        Command::Report => {
            let p = cmd_report(&cfg)?;
            println!("{}", p.display());
        }
        Command::Stats { ratings } => print!("{}", cmd_stats(&cfg, ratings)?),
        Command::All => {
            let p = cmd_all(&cfg)?;
            println!("{}", p.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// printing errors to stderr. Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
