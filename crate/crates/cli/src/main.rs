//! Command-line surface of the lyrics-generation pipeline.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error,
//! 3 verification failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lyricgen_core::error::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "lyricgen", version, about = "Theme-aware lyrics generation pipeline")]
struct Cli {
    /// JSON run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed overriding the configured one; every stage derives its
    /// own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize, clean, assign themes, and emit sentence pairs + vocabulary.
    Prepare(commands::prepare::PrepareArgs),
    /// Fit the LDA theme model on the raw corpus.
    LdaTrain(commands::lda::LdaTrainArgs),
    /// Print the ranked keywords of each theme.
    LdaKeywords(commands::lda::LdaKeywordsArgs),
    /// Infer theme proportions for a line or file of text.
    LdaInfer(commands::lda::LdaInferArgs),
    /// Pretrain skip-gram embeddings on the prepared pairs.
    EmbedTrain(commands::embed::EmbedTrainArgs),
    /// Train the seq2seq model.
    Train(commands::train::TrainArgs),
    /// Generate a themed lyric paragraph line by line.
    Generate(commands::generate::GenerateArgs),
    /// Verify every analytic gradient against finite differences.
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Compare additive vs dot-product attention cost over a grid.
    Bench(commands::bench::BenchArgs),
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };

    let outcome = match cli.command {
        Command::Prepare(args) => commands::prepare::run(&cfg, args),
        Command::LdaTrain(args) => commands::lda::run_train(&cfg, args),
        Command::LdaKeywords(args) => commands::lda::run_keywords(&cfg, args),
        Command::LdaInfer(args) => commands::lda::run_infer(&cfg, args),
        Command::EmbedTrain(args) => commands::embed::run(&cfg, args),
        Command::Train(args) => commands::train::run(&cfg, args),
        Command::Generate(args) => commands::generate::run(&cfg, args),
        Command::Gradcheck(args) => commands::gradcheck::run(&cfg, args),
        Command::Bench(args) => commands::bench::run(&cfg, args),
    };

    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
