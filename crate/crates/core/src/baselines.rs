//! Reference highlighters: seeded random masking and leave-one-out erasure.
//!
//! Random masks use ChaCha8 seeded with `seed` through
//! `SeedableRng::seed_from_u64`; instance `k` of a corpus draws from stream
//! `k` of that generator. Tokens are visited source first, then target, and
//! each is masked when a uniform draw in `[0, 1)` falls below the
//! probability. ChaCha output is platform independent, so masks are too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::scorer::Scorer;
use crate::types::{delete_phrase, PhrasePair, SentencePair, Side, Span, TokenMaskPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    LeaveOneOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub probability: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            kind: BaselineKind::Random,
            probability: 0.5,
            threshold: 0.0,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::Config(format!(
                "probability must be in [0, 1], got {}",
                self.probability
            )));
        }
        if self.threshold.is_nan() {
            return Err(Error::Config("threshold is NaN".into()));
        }
        Ok(())
    }
}

fn random_masks(pair: &SentencePair, probability: f64, rng: &mut ChaCha8Rng) -> TokenMaskPair {
    let mut draw = |n: usize| (0..n).map(|_| rng.random::<f64>() < probability).collect();
    let src_mask = draw(pair.src.len());
    let tgt_mask = draw(pair.tgt.len());
    TokenMaskPair { src_mask, tgt_mask }
}

pub fn random_highlight(pair: &SentencePair, probability: f64, seed: u64) -> TokenMaskPair {
    random_masks(pair, probability, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random masks for a corpus; instance `k` uses stream `k`.
pub fn random_corpus(pairs: &[SentencePair], probability: f64, seed: u64) -> Vec<TokenMaskPair> {
    let indexed: Vec<(usize, &SentencePair)> = pairs.iter().enumerate().collect();
    par::map(&indexed, |&(k, pair)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        random_masks(pair, probability, &mut rng)
    })
}

/// Marks token `k` when erasing it alone raises the score by more than
/// `threshold`. The original and all single-token erasures are scored in
/// one batch.
pub fn leave_one_out<S: Scorer + ?Sized>(
    pair: &SentencePair,
    scorer: &S,
    threshold: f64,
) -> Result<TokenMaskPair> {
    for side in [Side::Source, Side::Target] {
        let len = pair.tokens(side).len();
        if len < 2 {
            return Err(Error::SideTooShort {
                side: side.name(),
                min: 2,
                len,
            });
        }
    }
    let singles: Vec<PhrasePair> = (0..pair.src.len())
        .map(|i| PhrasePair::source_only(Span::new(i, i + 1)))
        .chain((0..pair.tgt.len()).map(|j| PhrasePair::target_only(Span::new(j, j + 1))))
        .collect();
    let mut batch = Vec::with_capacity(singles.len() + 1);
    batch.push(pair.clone());
    for p in &singles {
        batch.push(delete_phrase(pair, p)?);
    }
    let scores = scorer.score_batch(&batch)?;
    let base = scores[0];
    let marks: Vec<bool> = scores[1..].iter().map(|s| s - base > threshold).collect();
    let (src_mask, tgt_mask) = marks.split_at(pair.src.len());
    Ok(TokenMaskPair {
        src_mask: src_mask.to_vec(),
        tgt_mask: tgt_mask.to_vec(),
    })
}

pub fn leave_one_out_corpus<S: Scorer + ?Sized>(
    pairs: &[SentencePair],
    scorer: &S,
    threshold: f64,
) -> Result<Vec<TokenMaskPair>> {
    par::try_map(pairs, |p| leave_one_out(p, scorer, threshold))
}
