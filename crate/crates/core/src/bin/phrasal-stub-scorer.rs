//! Serves the lexical scorer over the stdio wire protocol.
//!
//! Usage: `phrasal-stub-scorer [LEXICON]`. Without a lexicon file the
//! synthetic-corpus lexicon is used.

use std::io::{self, BufReader};
use std::process::ExitCode;

use phrasal::scorer::{wire, BilingualLexicon, LexicalScorer};

fn main() -> ExitCode {
    let lexicon = match std::env::args().nth(1) {
        Some(path) => match BilingualLexicon::load(&path) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("{path}: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => phrasal::synth::lexicon(),
    };
    let scorer = LexicalScorer::new(lexicon);
    let stdin = io::stdin();
    match wire::serve_lines(&scorer, BufReader::new(stdin.lock()), io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
