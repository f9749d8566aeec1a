//! Contrastive phrasal highlight extraction.
//!
//! One step: build the aligned phrase table of the current pair, score every
//! erasure in one batch, keep those that raise the score by more than
//! `epsilon`, and pick the one maximising `score_after_erasure * brevity`.
//! The chosen phrase is erased and the step repeats on the reduced pair
//! until it scores as equivalent (`> 0`) or no erasure helps.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::phrase_table::{extract_phrase_pairs, Alignment, PhraseTable};
use crate::scorer::Scorer;
use crate::types::{
    delete_phrase, Highlight, HighlightSet, PhrasePair, SentencePair, Span, StopReason,
    TokenMaskPair,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractorConfig {
    /// Minimum score gain for an erasure to count as a contrast case.
    pub epsilon: f64,
    pub use_brevity_reward: bool,
    pub max_iterations: usize,
    pub max_phrase_len: Option<usize>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            epsilon: 0.01,
            use_brevity_reward: true,
            max_iterations: 64,
            max_phrase_len: None,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.max_phrase_len == Some(0) {
            return Err(Error::Config("max_phrase_len must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateEvaluation {
    pub phrase: PhrasePair,
    pub score_del: f64,
    pub br: f64,
    pub objective: f64,
}

/// `exp(-|p|/|S|)` when the erased pair scores `>= 0`, else `exp(+|p|/|S|)`.
/// Either way longer phrases lower the product with the score.
pub fn brevity_reward(pair_len: usize, phrase_len: usize, score_del: f64) -> f64 {
    let ratio = phrase_len as f64 / pair_len as f64;
    if score_del >= 0.0 {
        (-ratio).exp()
    } else {
        ratio.exp()
    }
}

/// Scores every erasable table entry in one batch and keeps those whose
/// erasure beats `base_score + epsilon`. Entries that would empty a side are
/// skipped.
pub fn candidate_set<S: Scorer + ?Sized>(
    pair: &SentencePair,
    table: &PhraseTable,
    base_score: f64,
    scorer: &S,
    cfg: &ExtractorConfig,
) -> Result<Vec<CandidateEvaluation>> {
    let phrases: Vec<PhrasePair> = table
        .iter()
        .copied()
        .filter(|p| pair.can_delete(p))
        .collect();
    if phrases.is_empty() {
        return Ok(Vec::new());
    }
    let erased = phrases
        .iter()
        .map(|p| delete_phrase(pair, p))
        .collect::<Result<Vec<_>>>()?;
    let scores = scorer.score_batch(&erased)?;
    if scores.len() != phrases.len() {
        return Err(Error::LengthMismatch {
            expected: phrases.len(),
            got: scores.len(),
        });
    }
    let threshold = base_score + cfg.epsilon;
    Ok(phrases
        .into_iter()
        .zip(scores)
        .filter(|(_, s)| *s > threshold)
        .map(|(phrase, score_del)| {
            let br = brevity_reward(pair.len(), phrase.len(), score_del);
            let objective = if cfg.use_brevity_reward {
                score_del * br
            } else {
                score_del
            };
            CandidateEvaluation {
                phrase,
                score_del,
                br,
                objective,
            }
        })
        .collect())
}

/// Total preference order: higher objective, then higher erased score, then
/// shorter phrase, then earlier `(src start, tgt start)`, then span order.
pub fn preference(a: &CandidateEvaluation, b: &CandidateEvaluation) -> Ordering {
    b.objective
        .total_cmp(&a.objective)
        .then(b.score_del.total_cmp(&a.score_del))
        .then(a.phrase.len().cmp(&b.phrase.len()))
        .then(
            (a.phrase.src.start, a.phrase.tgt.start).cmp(&(b.phrase.src.start, b.phrase.tgt.start)),
        )
        .then(a.phrase.cmp(&b.phrase))
}

pub fn select_highlight(cands: &[CandidateEvaluation]) -> Result<CandidateEvaluation> {
    cands
        .iter()
        .min_by(|a, b| preference(a, b))
        .copied()
        .ok_or(Error::EmptyCandidates)
}

/// Erasures applied so far, with the surviving-token maps back to the
/// original pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeletionHistory {
    deletions: Vec<PhrasePair>,
    src_map: Vec<usize>,
    tgt_map: Vec<usize>,
}

impl DeletionHistory {
    pub fn new(src_len: usize, tgt_len: usize) -> Self {
        DeletionHistory {
            deletions: Vec::new(),
            src_map: (0..src_len).collect(),
            tgt_map: (0..tgt_len).collect(),
        }
    }

    /// Replays `deletions` (each in the coordinates of the pair it was applied to).
    pub fn replay(src_len: usize, tgt_len: usize, deletions: &[PhrasePair]) -> Result<Self> {
        let mut h = Self::new(src_len, tgt_len);
        for p in deletions {
            h.push(*p)?;
        }
        Ok(h)
    }

    pub fn deletions(&self) -> &[PhrasePair] {
        &self.deletions
    }

    /// Current (reduced) side lengths.
    pub fn reduced_lens(&self) -> (usize, usize) {
        (self.src_map.len(), self.tgt_map.len())
    }

    pub fn push(&mut self, p: PhrasePair) -> Result<()> {
        if p.src.end > self.src_map.len() || p.tgt.end > self.tgt_map.len() {
            return Err(Error::InconsistentHistory(format!(
                "deletion {p:?} exceeds reduced lengths {:?}",
                self.reduced_lens()
            )));
        }
        self.src_map.drain(p.src.indices());
        self.tgt_map.drain(p.tgt.indices());
        self.deletions.push(p);
        Ok(())
    }

    /// Original token indices covered by a reduced-coordinate phrase.
    pub fn original_tokens(&self, p: &PhrasePair) -> Result<(Vec<usize>, Vec<usize>)> {
        if p.src.end > self.src_map.len() || p.tgt.end > self.tgt_map.len() {
            return Err(Error::InconsistentHistory(format!(
                "phrase {p:?} exceeds reduced lengths {:?}",
                self.reduced_lens()
            )));
        }
        Ok((
            self.src_map[p.src.indices()].to_vec(),
            self.tgt_map[p.tgt.indices()].to_vec(),
        ))
    }

    /// Maps a reduced-coordinate phrase to the smallest original spans
    /// covering its tokens. Gaps inside a covering span are tokens erased
    /// by earlier steps.
    pub fn to_original(&self, p: &PhrasePair) -> Result<PhrasePair> {
        let (src, tgt) = self.original_tokens(p)?;
        let cover = |ix: &[usize]| match (ix.first(), ix.last()) {
            (Some(&s), Some(&e)) => Span::new(s, e + 1),
            _ => Span::EMPTY,
        };
        Ok(PhrasePair {
            src: cover(&src),
            tgt: cover(&tgt),
        })
    }
}

pub fn remap_spans_after_delete(p: &PhrasePair, history: &DeletionHistory) -> Result<PhrasePair> {
    history.to_original(p)
}

/// Drops links touching erased tokens and shifts the survivors left.
pub fn remap_alignment_after_delete(a: &Alignment, p: &PhrasePair) -> Alignment {
    let shift = |k: usize, span: Span| if k >= span.end { k - span.len() } else { k };
    Alignment::from_links(
        a.links()
            .filter(|&(i, j)| !p.src.contains(i) && !p.tgt.contains(j))
            .map(|(i, j)| (shift(i, p.src), shift(j, p.tgt))),
    )
}

/// Runs the iterative extraction on one pair. Returned spans index the
/// original pair.
pub fn extract_highlights<S: Scorer + ?Sized>(
    pair: &SentencePair,
    alignment: &Alignment,
    scorer: &S,
    cfg: &ExtractorConfig,
) -> Result<HighlightSet> {
    cfg.validate()?;
    pair.check_nonempty()?;
    alignment.validate(pair.src.len(), pair.tgt.len())?;

    let initial_score = scorer.score(pair)?;
    let mut result = HighlightSet {
        id: pair.id.clone(),
        phrases: Vec::new(),
        src_mask: vec![false; pair.src.len()],
        tgt_mask: vec![false; pair.tgt.len()],
        initial_score,
        iterations: 0,
        stopped_by: StopReason::InitiallyEquivalent,
    };
    if initial_score > 0.0 {
        return Ok(result);
    }

    let mut masks = TokenMaskPair::for_pair(pair);
    let mut history = DeletionHistory::new(pair.src.len(), pair.tgt.len());
    let mut current = pair.clone();
    let mut links = alignment.clone();
    let mut score = initial_score;

    result.stopped_by = loop {
        if result.iterations >= cfg.max_iterations {
            break StopReason::IterationLimit;
        }
        let table = extract_phrase_pairs(&current, &links, cfg.max_phrase_len);
        let cands = candidate_set(&current, &table, score, scorer, cfg)?;
        if cands.is_empty() {
            break StopReason::NoCandidates;
        }
        let best = select_highlight(&cands)?;
        let original = history.to_original(&best.phrase)?;
        let (src_text, tgt_text) = current.surface(&best.phrase);
        masks.mark(&original);
        result.phrases.push(Highlight {
            phrase: original,
            src_text,
            tgt_text,
            score_del: best.score_del,
            objective: best.objective,
        });
        result.iterations += 1;

        current = delete_phrase(&current, &best.phrase)?;
        links = remap_alignment_after_delete(&links, &best.phrase);
        history.push(best.phrase)?;
        score = best.score_del;
        if score > 0.0 {
            break StopReason::Equivalent;
        }
    };
    result.src_mask = masks.src_mask;
    result.tgt_mask = masks.tgt_mask;
    Ok(result)
}

/// Extraction over a corpus; instances run in parallel with the `parallel`
/// feature. Output order matches input order.
pub fn extract_corpus<S: Scorer + ?Sized>(
    instances: &[(SentencePair, Alignment)],
    scorer: &S,
    cfg: &ExtractorConfig,
) -> Result<Vec<HighlightSet>> {
    par::try_map(instances, |(pair, a)| {
        extract_highlights(pair, a, scorer, cfg)
    })
}

/// Sequential variant of [`extract_corpus`].
pub fn extract_corpus_seq<S: Scorer + ?Sized>(
    instances: &[(SentencePair, Alignment)],
    scorer: &S,
    cfg: &ExtractorConfig,
) -> Result<Vec<HighlightSet>> {
    instances
        .iter()
        .map(|(pair, a)| extract_highlights(pair, a, scorer, cfg))
        .collect()
}
