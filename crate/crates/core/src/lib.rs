//! Minimal contrastive phrasal highlights for two-input divergence rankers.
//!
//! Given a sentence pair, its word alignment and a ranker that scores the pair
//! (`> 0` equivalent, `< 0` divergent), the extractor repeatedly erases the
//! aligned phrase pair whose removal most increases the score, weighted by a
//! brevity reward, until the pair looks equivalent or nothing helps anymore.
//!
//! Modules:
//!
//! * [`types`]: sentence pairs, spans, phrase pairs, masks and the erasure operation.
//! * [`phrase_table`]: alignment-consistent phrase pair extraction.
//! * [`scorer`]: the ranker contract, a lexical test scorer and an external client.
//! * [`extractor`]: candidate contrast set, brevity reward, iterative erasure.
//! * [`baselines`]: random and leave-one-out highlighters.
//! * [`eval`]: rationale agreement, minimality, bootstrap tests, kappa, voting.
//! * [`io`]: line-delimited corpus, highlight, mask and annotation records.
//! * [`synth`]: synthetic corpora with planted divergences.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod extractor;
pub mod io;
pub mod par;
pub mod phrase_table;
pub mod scorer;
pub mod synth;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod types;

pub use error::{Error, Result};
pub use extractor::{extract_highlights, ExtractorConfig};
pub use phrase_table::{extract_phrase_pairs, Alignment, PhraseTable};
pub use scorer::{LexicalScorer, Scorer};
pub use types::{HighlightSet, PhrasePair, SentencePair, Span, TokenMaskPair};
