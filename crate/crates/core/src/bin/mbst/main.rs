mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{CheckFailed, MissingInput, OutputExists};
use crate::config::ConfigError;

#[derive(Parser)]
#[command(name = "mbst", version, about = "Style transfer through pivot-language back-translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// `key = value` configuration file; unset keys keep their defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output file or directory; must not exist unless --force is given.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Replace an existing output.
    #[arg(long)]
    pub force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic parallel and style corpora with a split manifest.
    SynthData {
        #[command(flatten)]
        common: Common,
    },
    /// Train the one-to-many and many-to-one translation systems.
    TrainMt {
        #[command(flatten)]
        common: Common,
        /// Directory written by synth-data.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
    },
    /// Train the classifier and a BST or MBST generator pair.
    TrainStyle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Directory written by train-mt.
        #[arg(long, value_name = "DIR")]
        mt: Option<PathBuf>,
        /// bst or mbst.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Fine-tune an MBST checkpoint with the cycle feedback loss.
    FinetuneFeedback {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// MBST checkpoint to start from.
        #[arg(long, value_name = "DIR")]
        parent: Option<PathBuf>,
    },
    /// Rewrite a labeled file in the opposite styles.
    Transfer {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
        /// Labeled `<style>\t<tokens>` file.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Score a checkpoint on the held-out split and write a report.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
        /// Second checkpoint for a human-evaluation sheet.
        #[arg(long, value_name = "DIR")]
        compare: Option<PathBuf>,
        /// Sheet path; the key goes to `<PATH>.key`.
        #[arg(long, value_name = "PATH", requires = "compare")]
        sheet: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Compare analytic and finite-difference gradients of every primitive
    /// and of the generator objective.
    GradCheck {
        #[command(flatten)]
        common: Common,
        /// Random instances per primitive.
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_MISSING_INPUT: u8 = 4;
const EXIT_OUTPUT_EXISTS: u8 = 5;
const EXIT_DIVERGED: u8 = 6;
const EXIT_DATA: u8 = 7;
const EXIT_CHECK_FAILED: u8 = 8;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<MissingInput>() {
            return EXIT_MISSING_INPUT;
        }
        if cause.is::<OutputExists>() {
            return EXIT_OUTPUT_EXISTS;
        }
        if cause.is::<CheckFailed>() {
            return EXIT_CHECK_FAILED;
        }
        if let Some(e) = cause.downcast_ref::<mbst::Error>() {
            return match e {
                mbst::Error::Diverged { .. } => EXIT_DIVERGED,
                mbst::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_INPUT,
                mbst::Error::Io(_) => EXIT_FAILURE,
                mbst::Error::InvalidArgument(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return EXIT_MISSING_INPUT;
            }
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthData { common } => commands::synth_data(&common),
        Command::TrainMt { common, data } => commands::train_mt(&common, data),
        Command::TrainStyle {
            common,
            data,
            mt,
            variant,
        } => commands::train_style(&common, data, mt, variant),
        Command::FinetuneFeedback { common, data, parent } => commands::finetune(&common, data, parent),
        Command::Transfer {
            common,
            checkpoint,
            input,
        } => commands::transfer(&common, checkpoint, input),
        Command::Evaluate {
            common,
            data,
            checkpoint,
            compare,
            sheet,
            samples,
        } => commands::evaluate(&common, data, checkpoint, compare, sheet, samples),
        Command::GradCheck { common, trials } => commands::grad_check(&common, trials),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
