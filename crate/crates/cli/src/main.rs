use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

mod commands;
mod compare;
mod config;

use config::RunConfig;

/// Contrastive phrasal highlights for divergence rankers.
#[derive(Debug, Parser)]
#[command(name = "phrasal", version)]
struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract highlights for every instance of a corpus.
    Extract(commands::ExtractArgs),
    /// Random or leave-one-out token masks.
    Baseline(commands::BaselineArgs),
    /// Token-level agreement of predicted masks with gold rationales.
    Eval(compare::EvalArgs),
    /// Bootstrap significance test between two groups.
    Compare(compare::CompareArgs),
    /// Fill in missing alignments with the greedy lexicon aligner.
    AlignToy(commands::AlignArgs),
    /// Run the annotation study server.
    Serve(commands::ServeArgs),
    /// Write a synthetic corpus with planted divergences.
    Synth(commands::SynthArgs),
    /// Serve a lexical scorer over the stdio line protocol.
    StubScorer(StubArgs),
}

#[derive(Debug, clap::Args)]
struct StubArgs {
    /// Lexicon file; the synthetic corpus lexicon when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    let file = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Extract(a) => commands::extract(a, &file),
        Command::Baseline(a) => commands::baseline(a, &file),
        Command::Eval(a) => compare::eval(a, &file),
        Command::Compare(a) => compare::compare(a, &file),
        Command::AlignToy(a) => commands::align_toy(a, &file),
        Command::Serve(a) => commands::serve(a, &file),
        Command::Synth(a) => commands::synth(a),
        Command::StubScorer(a) => {
            let lex = match a.lexicon {
                Some(p) => phrasal::scorer::BilingualLexicon::load(p)?,
                None => phrasal::synth::lexicon(),
            };
            let scorer = phrasal::LexicalScorer::new(lex);
            let stdin = std::io::stdin();
            phrasal::scorer::wire::serve_lines(&scorer, stdin.lock(), std::io::stdout().lock())?;
            Ok(())
        }
    }
}

/// Machine-readable tag for the error at the root of `e`.
fn error_code(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(p) = cause.downcast_ref::<phrasal::Error>() {
            return p.code();
        }
        if let Some(s) = cause.downcast_ref::<phrasal_service::ServiceError>() {
            return s.code();
        }
        if cause.is::<std::io::Error>() {
            return "io_error";
        }
    }
    "error"
}

fn fail(code: &str, message: &str) {
    let line = json!({ "error": code, "message": message.replace('\n', " ") });
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let head = text.split("\n\nUsage").next().unwrap_or("");
            let words: Vec<&str> = head.split_whitespace().collect();
            fail("usage", words.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            fail(error_code(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
