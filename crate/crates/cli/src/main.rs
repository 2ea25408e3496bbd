//! `tritwatch`: count groups, detect anomalies, score and tune from the command line.

mod commands;
mod settings;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{CommonArgs, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "tritwatch",
    version,
    about = "Crowd anomaly detection from group-count dynamics"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count groups on every F-th frame of a PGM directory or raw plane file
    Count { frames: PathBuf },
    /// Descriptor timeline and alarms from a counts CSV
    Detect {
        counts: PathBuf,
        /// Labels drawn on the SVG timeline
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also write timeline.svg
        #[arg(long)]
        svg: bool,
    },
    /// Score an alarms CSV against labels
    Eval {
        alarms: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Grid search over a dataset manifest
    Tune { manifest: PathBuf },
    /// Generate synthetic inputs from a scenario file
    Synth { spec: PathBuf },
    /// Count, detect and (with labels) evaluate in one pass
    Run {
        /// Frame directory, raw plane file or counts CSV
        input: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
}

pub enum Failure {
    Usage(String),
    Core(tritwatch::Error),
}

impl From<tritwatch::Error> for Failure {
    fn from(e: tritwatch::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use tritwatch::Error;
        match self {
            Failure::Usage(_) | Failure::Core(Error::InvalidArgument(_)) => 1,
            Failure::Core(Error::Parse { .. } | Error::Io { .. }) => 2,
            Failure::Core(Error::InsufficientData { .. }) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let settings = Settings::resolve(&cli.common)?;
    let ctx = commands::Ctx {
        settings,
        argv: std::env::args().collect::<Vec<_>>().join(" "),
    };
    match &cli.command {
        Command::Count { frames } => commands::count(&ctx, frames),
        Command::Detect { counts, labels, svg } => commands::detect(&ctx, counts, labels.as_deref(), *svg),
        Command::Eval { alarms, labels } => commands::eval(&ctx, alarms, labels.as_deref()),
        Command::Tune { manifest } => commands::tune(&ctx, manifest),
        Command::Synth { spec } => commands::synth(&ctx, spec),
        Command::Run { input, labels, svg } => commands::run(&ctx, input, labels.as_deref(), *svg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
