//! Flat run configuration: a TOML file whose keys mirror the command-line
//! flags. Flags win over the file, the file over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phrasal::scorer::{BilingualLexicon, ExternalScorer, ExternalScorerConfig};
use phrasal::{LexicalScorer, Scorer};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scorer: Option<ScorerKind>,
    pub lexicon: Option<PathBuf>,
    pub command: Option<String>,
    pub url: Option<String>,
    pub timeout_ms: Option<u64>,
    pub epsilon: Option<f64>,
    pub brevity_reward: Option<bool>,
    pub max_phrase_len: Option<usize>,
    pub max_iterations: Option<usize>,
    pub kind: Option<String>,
    pub probability: Option<f64>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub resamples: Option<usize>,
    pub mode: Option<String>,
    pub metric: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    /// Built-in lexical overlap scorer.
    Lexical,
    /// External program speaking the line protocol on stdin/stdout.
    Subprocess,
    /// External HTTP endpoint taking JSON arrays.
    Http,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| {
            phrasal::Error::Config(format!("{}: {}", path.display(), e.message())).into()
        })
    }
}

/// Scorer flags shared by every command that runs the ranker.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ScorerArgs {
    /// Which ranker to query.
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    /// Bilingual lexicon for the lexical scorer (two words per line).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Program and arguments of a subprocess scorer, split on whitespace.
    #[arg(long)]
    pub command: Option<String>,
    /// URL of an HTTP scorer.
    #[arg(long)]
    pub url: Option<String>,
    /// Per-request timeout for external scorers.
    #[arg(long)]
    pub timeout_ms: Option<u64>,
}

impl ScorerArgs {
    fn merged(&self, file: &RunConfig) -> ScorerArgs {
        ScorerArgs {
            scorer: self.scorer.or(file.scorer),
            lexicon: self.lexicon.clone().or_else(|| file.lexicon.clone()),
            command: self.command.clone().or_else(|| file.command.clone()),
            url: self.url.clone().or_else(|| file.url.clone()),
            timeout_ms: self.timeout_ms.or(file.timeout_ms),
        }
    }

    /// Lexicon named by the flags or the file; empty when none is given.
    pub fn lexicon(&self, file: &RunConfig) -> Result<BilingualLexicon> {
        match self.merged(file).lexicon {
            Some(p) => Ok(BilingualLexicon::load(&p)?),
            None => Ok(BilingualLexicon::new()),
        }
    }

    /// Builds the one selected scorer. The kind defaults to lexical unless
    /// only a command or only a URL is given.
    pub fn build(&self, file: &RunConfig) -> Result<Box<dyn Scorer>> {
        let a = self.merged(file);
        let kind = match (a.scorer, &a.command, &a.url) {
            (Some(k), _, _) => k,
            (None, Some(_), None) => ScorerKind::Subprocess,
            (None, None, Some(_)) => ScorerKind::Http,
            (None, None, None) => ScorerKind::Lexical,
            (None, Some(_), Some(_)) => bail!(config(
                "both command and url given; select exactly one scorer"
            )),
        };
        let stray = match kind {
            ScorerKind::Lexical => a.command.is_some() || a.url.is_some(),
            ScorerKind::Subprocess => a.url.is_some() || a.lexicon.is_some(),
            ScorerKind::Http => a.command.is_some() || a.lexicon.is_some(),
        };
        if stray {
            bail!(config(
                "settings for more than one scorer given; select exactly one"
            ));
        }
        let timeout = a.timeout_ms.unwrap_or(30_000);
        Ok(match kind {
            ScorerKind::Lexical => Box::new(LexicalScorer::new(self.lexicon(file)?)),
            ScorerKind::Subprocess => {
                let cmd = a
                    .command
                    .ok_or_else(|| config("subprocess scorer needs --command"))?;
                let argv: Vec<&str> = cmd.split_whitespace().collect();
                let cfg = ExternalScorerConfig::subprocess(argv).with_timeout_ms(timeout);
                Box::new(ExternalScorer::connect(&cfg)?)
            }
            ScorerKind::Http => {
                let url = a.url.ok_or_else(|| config("http scorer needs --url"))?;
                Box::new(ExternalScorer::connect(
                    &ExternalScorerConfig::http(url).with_timeout_ms(timeout),
                )?)
            }
        })
    }
}

pub fn config(msg: impl Into<String>) -> phrasal::Error {
    phrasal::Error::Config(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_parse() {
        let c: RunConfig = toml::from_str(
            "epsilon = 0.05\nbrevity_reward = false\nscorer = \"lexical\"\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(c.epsilon, Some(0.05));
        assert_eq!(c.brevity_reward, Some(false));
        assert_eq!(c.scorer, Some(ScorerKind::Lexical));
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            url: Some("http://x".into()),
            ..Default::default()
        };
        let flags = ScorerArgs {
            scorer: Some(ScorerKind::Lexical),
            ..Default::default()
        };
        // lexical from the flag, but the file still selects an http url
        assert!(flags.build(&file).is_err());
        assert!(ScorerArgs::default().build(&RunConfig::default()).is_ok());
    }
}
