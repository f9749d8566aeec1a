use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scorer::Scorer;
use crate::types::SentencePair;

/// Lowercased `(source word, target word)` translation entries. Identical
/// lowercase forms always match, whether listed or not.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BilingualLexicon {
    entries: HashSet<(String, String)>,
}

impl BilingualLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<A: AsRef<str>, B: AsRef<str>>(
        pairs: impl IntoIterator<Item = (A, B)>,
    ) -> Self {
        let mut lex = Self::new();
        for (s, t) in pairs {
            lex.insert(s.as_ref(), t.as_ref());
        }
        lex
    }

    pub fn insert(&mut self, src: &str, tgt: &str) {
        self.entries
            .insert((src.to_lowercase(), tgt.to_lowercase()));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn matches(&self, src: &str, tgt: &str) -> bool {
        let (s, t) = (src.to_lowercase(), tgt.to_lowercase());
        s == t || self.entries.contains(&(s, t))
    }

    /// One entry per line, two whitespace-separated words; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(s), Some(t), None) => lex.insert(s, t),
                _ => {
                    return Err(Error::Parse(format!(
                        "lexicon line {}: expected two words, got {line:?}",
                        n + 1
                    )))
                }
            }
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Entries sorted, for writing back out.
    pub fn sorted_entries(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> = self.entries.iter().cloned().collect();
        v.sort();
        v
    }
}

/// Greedy lexical agreement score in `[-1, 1]`.
///
/// Each source token, left to right, claims the first unclaimed target
/// token it matches. With `m` matches over `n` tokens in total the score is
/// `(4m - n) / n`: +1 when everything pairs up, -1 when nothing does.
pub fn lexical_score(pair: &SentencePair, lex: &BilingualLexicon) -> Result<f64> {
    pair.check_nonempty()?;
    let mut used = vec![false; pair.tgt.len()];
    let mut matched = 0usize;
    for s in &pair.src {
        let hit = pair
            .tgt
            .iter()
            .enumerate()
            .find(|(j, t)| !used[*j] && lex.matches(s, t))
            .map(|(j, _)| j);
        if let Some(j) = hit {
            used[j] = true;
            matched += 1;
        }
    }
    let n = pair.len() as f64;
    Ok((4.0 * matched as f64 - n) / n)
}

#[derive(Clone, Debug, Default)]
pub struct LexicalScorer {
    pub lexicon: BilingualLexicon,
}

impl LexicalScorer {
    pub fn new(lexicon: BilingualLexicon) -> Self {
        LexicalScorer { lexicon }
    }
}

impl Scorer for LexicalScorer {
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        pairs
            .iter()
            .map(|p| lexical_score(p, &self.lexicon))
            .collect()
    }
}
