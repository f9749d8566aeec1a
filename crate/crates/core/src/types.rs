//! Domain types shared by every other module.
//!
//! Tokens are opaque surface strings. Spans are half-open token ranges; a
//! [`PhrasePair`] holds one span per side, either of which may be empty (but
//! not both). Empty spans are always normalised to `0..0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
        }
    }
}

/// Half-open token range `[start, end)`. Serialised as `[start, end]`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const EMPTY: Span = Span { start: 0, end: 0 };

    /// Builds a span; any empty range collapses to [`Span::EMPTY`].
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {start} > end {end}");
        if start >= end {
            Span::EMPTY
        } else {
            Span { start, end }
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((s, e): (usize, usize)) -> Self {
        Span::new(s, e.max(s))
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

/// A source span and a target span erased together. Ordered by
/// `(src, tgt)`, which gives phrase tables a stable iteration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhrasePair {
    pub src: Span,
    pub tgt: Span,
}

impl PhrasePair {
    pub fn new(src: Span, tgt: Span) -> Self {
        debug_assert!(
            !(src.is_empty() && tgt.is_empty()),
            "phrase pair with two empty spans"
        );
        PhrasePair { src, tgt }
    }

    pub fn source_only(src: Span) -> Self {
        PhrasePair::new(src, Span::EMPTY)
    }

    pub fn target_only(tgt: Span) -> Self {
        PhrasePair::new(Span::EMPTY, tgt)
    }

    /// Token count over both sides.
    pub fn len(&self) -> usize {
        self.src.len() + self.tgt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_two_sided(&self) -> bool {
        !self.src.is_empty() && !self.tgt.is_empty()
    }

    pub fn span(&self, side: Side) -> Span {
        match side {
            Side::Source => self.src,
            Side::Target => self.tgt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    #[serde(default)]
    pub src_lang: String,
    #[serde(default)]
    pub tgt_lang: String,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
}

impl SentencePair {
    pub fn new<S: Into<String>>(id: impl Into<String>, src: Vec<S>, tgt: Vec<S>) -> Self {
        SentencePair {
            id: id.into(),
            src_lang: String::new(),
            tgt_lang: String::new(),
            src: src.into_iter().map(Into::into).collect(),
            tgt: tgt.into_iter().map(Into::into).collect(),
        }
    }

    /// Whitespace-tokenises both sides.
    pub fn from_text(id: impl Into<String>, src: &str, tgt: &str) -> Result<Self> {
        Ok(SentencePair::new(
            id,
            tokenize(src, TokenizeMode::Whitespace)?,
            tokenize(tgt, TokenizeMode::Whitespace)?,
        ))
    }

    pub fn with_langs(mut self, src_lang: impl Into<String>, tgt_lang: impl Into<String>) -> Self {
        self.src_lang = src_lang.into();
        self.tgt_lang = tgt_lang.into();
        self
    }

    pub fn tokens(&self, side: Side) -> &[String] {
        match side {
            Side::Source => &self.src,
            Side::Target => &self.tgt,
        }
    }

    /// `|S|`: total token count over both sides.
    pub fn len(&self) -> usize {
        self.src.len() + self.tgt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty() && self.tgt.is_empty()
    }

    pub fn src_text(&self) -> String {
        self.src.join(" ")
    }

    pub fn tgt_text(&self) -> String {
        self.tgt.join(" ")
    }

    pub fn surface(&self, p: &PhrasePair) -> (String, String) {
        (
            self.src[p.src.indices()].join(" "),
            self.tgt[p.tgt.indices()].join(" "),
        )
    }

    pub fn check_nonempty(&self) -> Result<()> {
        if self.src.is_empty() || self.tgt.is_empty() {
            return Err(Error::EmptySentence);
        }
        Ok(())
    }

    pub fn check_phrase(&self, p: &PhrasePair) -> Result<()> {
        for side in [Side::Source, Side::Target] {
            let span = p.span(side);
            let len = self.tokens(side).len();
            if span.end > len {
                return Err(Error::OutOfRange {
                    side: side.name(),
                    start: span.start,
                    end: span.end,
                    len,
                });
            }
        }
        Ok(())
    }

    /// True if erasing `p` leaves both sides non-empty.
    pub fn can_delete(&self, p: &PhrasePair) -> bool {
        p.src.len() < self.src.len() && p.tgt.len() < self.tgt.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenizeMode {
    /// Split on any run of Unicode whitespace.
    Whitespace,
    /// Input is already tokenised and joined by single spaces.
    Pretokenized,
}

pub fn tokenize(text: &str, mode: TokenizeMode) -> Result<Vec<String>> {
    let tokens: Vec<String> = match mode {
        TokenizeMode::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        TokenizeMode::Pretokenized => {
            if text.is_empty() {
                Vec::new()
            } else {
                text.split(' ').map(str::to_owned).collect()
            }
        }
    };
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    Ok(tokens)
}

/// Erases the tokens covered by `p` from both sides. The input is untouched.
pub fn delete_phrase(pair: &SentencePair, p: &PhrasePair) -> Result<SentencePair> {
    pair.check_phrase(p)?;
    if p.src.len() >= pair.src.len() {
        return Err(Error::WouldEmptySide(Side::Source.name()));
    }
    if p.tgt.len() >= pair.tgt.len() {
        return Err(Error::WouldEmptySide(Side::Target.name()));
    }
    let keep = |tokens: &[String], span: Span| -> Vec<String> {
        tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| !span.contains(*i))
            .map(|(_, t)| t.clone())
            .collect()
    };
    Ok(SentencePair {
        id: pair.id.clone(),
        src_lang: pair.src_lang.clone(),
        tgt_lang: pair.tgt_lang.clone(),
        src: keep(&pair.src, p.src),
        tgt: keep(&pair.tgt, p.tgt),
    })
}

/// Per-token boolean masks for both sides: gold rationales, predictions, baselines.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenMaskPair {
    pub src_mask: Vec<bool>,
    pub tgt_mask: Vec<bool>,
}

impl TokenMaskPair {
    pub fn empty(src_len: usize, tgt_len: usize) -> Self {
        TokenMaskPair {
            src_mask: vec![false; src_len],
            tgt_mask: vec![false; tgt_len],
        }
    }

    pub fn for_pair(pair: &SentencePair) -> Self {
        Self::empty(pair.src.len(), pair.tgt.len())
    }

    pub fn mark(&mut self, p: &PhrasePair) {
        self.src_mask[p.src.indices()]
            .iter_mut()
            .for_each(|m| *m = true);
        self.tgt_mask[p.tgt.indices()]
            .iter_mut()
            .for_each(|m| *m = true);
    }

    pub fn count(&self) -> usize {
        self.iter().filter(|&m| m).count()
    }

    pub fn len(&self) -> usize {
        self.src_mask.len() + self.tgt_mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Both sides concatenated, source first.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.src_mask.iter().chain(&self.tgt_mask).copied()
    }

    pub fn check_shape(&self, src_len: usize, tgt_len: usize) -> Result<()> {
        if self.src_mask.len() != src_len || self.tgt_mask.len() != tgt_len {
            return Err(Error::Shape(format!(
                "masks are {}+{} tokens, expected {}+{}",
                self.src_mask.len(),
                self.tgt_mask.len(),
                src_len,
                tgt_len
            )));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &TokenMaskPair) -> Result<()> {
        other.check_shape(self.src_mask.len(), self.tgt_mask.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The pair already scored as equivalent; nothing to explain.
    InitiallyEquivalent,
    /// No erasure raised the score by more than the margin.
    NoCandidates,
    /// The reduced pair scores as equivalent.
    Equivalent,
    /// Hit the configured iteration cap.
    IterationLimit,
}

/// One extracted highlight, in original-pair coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    #[serde(flatten)]
    pub phrase: PhrasePair,
    pub src_text: String,
    pub tgt_text: String,
    /// Score of the pair after this erasure.
    pub score_del: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighlightSet {
    pub id: String,
    pub phrases: Vec<Highlight>,
    pub src_mask: Vec<bool>,
    pub tgt_mask: Vec<bool>,
    pub initial_score: f64,
    pub iterations: usize,
    pub stopped_by: StopReason,
}

impl HighlightSet {
    pub fn masks(&self) -> TokenMaskPair {
        TokenMaskPair {
            src_mask: self.src_mask.clone(),
            tgt_mask: self.tgt_mask.clone(),
        }
    }

    /// Score after each accepted erasure, in extraction order.
    pub fn score_trace(&self) -> Vec<f64> {
        self.phrases.iter().map(|h| h.score_del).collect()
    }
}

/// Union of all highlight spans, per side.
pub fn masks_from_highlights(pair: &SentencePair, hs: &HighlightSet) -> Result<TokenMaskPair> {
    let mut masks = TokenMaskPair::for_pair(pair);
    for h in &hs.phrases {
        pair.check_phrase(&h.phrase).map_err(|e| {
            Error::Shape(format!("highlight for {:?} does not fit pair: {e}", hs.id))
        })?;
        masks.mark(&h.phrase);
    }
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(src: &[&str], tgt: &[&str]) -> SentencePair {
        SentencePair::new("p", src.to_vec(), tgt.to_vec())
    }

    #[test]
    fn tokenize_whitespace() {
        assert_eq!(
            tokenize("the cat", TokenizeMode::Whitespace).unwrap(),
            ["the", "cat"]
        );
        assert_eq!(
            tokenize(" a  b ", TokenizeMode::Whitespace).unwrap(),
            ["a", "b"]
        );
        assert_eq!(
            tokenize("a\u{3000}b\tc", TokenizeMode::Whitespace).unwrap(),
            ["a", "b", "c"]
        );
        assert!(matches!(
            tokenize("", TokenizeMode::Whitespace),
            Err(Error::EmptySentence)
        ));
        assert!(matches!(
            tokenize("  \n", TokenizeMode::Whitespace),
            Err(Error::EmptySentence)
        ));
    }

    #[test]
    fn tokenize_pretokenized() {
        assert_eq!(
            tokenize("l' homme", TokenizeMode::Pretokenized).unwrap(),
            ["l'", "homme"]
        );
        assert!(matches!(
            tokenize("", TokenizeMode::Pretokenized),
            Err(Error::EmptySentence)
        ));
    }

    #[test]
    fn delete_single_source_token() {
        let s = pair(&["a", "b", "c"], &["x", "y"]);
        let out = delete_phrase(&s, &PhrasePair::source_only(Span::new(1, 2))).unwrap();
        assert_eq!(out.src, ["a", "c"]);
        assert_eq!(out.tgt, ["x", "y"]);
        assert_eq!(s.src, ["a", "b", "c"]);
    }

    #[test]
    fn delete_two_sided() {
        let s = pair(&["a", "b", "c", "d"], &["x", "y", "z"]);
        let out = delete_phrase(&s, &PhrasePair::new(Span::new(1, 3), Span::new(2, 3))).unwrap();
        assert_eq!(out.src, ["a", "d"]);
        assert_eq!(out.tgt, ["x", "y"]);
    }

    #[test]
    fn delete_guards() {
        let s = pair(&["a"], &["x"]);
        let p = PhrasePair::new(Span::new(0, 1), Span::new(0, 1));
        assert!(matches!(
            delete_phrase(&s, &p),
            Err(Error::WouldEmptySide(_))
        ));
        let s = pair(&["a", "b"], &["x"]);
        let p = PhrasePair::source_only(Span::new(1, 3));
        assert!(matches!(
            delete_phrase(&s, &p),
            Err(Error::OutOfRange { .. })
        ));
    }

    fn hs(phrases: &[PhrasePair]) -> HighlightSet {
        HighlightSet {
            id: "p".into(),
            phrases: phrases
                .iter()
                .map(|&phrase| Highlight {
                    phrase,
                    src_text: String::new(),
                    tgt_text: String::new(),
                    score_del: 0.0,
                    objective: 0.0,
                })
                .collect(),
            src_mask: vec![],
            tgt_mask: vec![],
            initial_score: 0.0,
            iterations: phrases.len(),
            stopped_by: StopReason::Equivalent,
        }
    }

    #[test]
    fn masks_union() {
        let s = pair(&["a", "b", "c"], &["x", "y"]);
        let m = masks_from_highlights(&s, &hs(&[])).unwrap();
        assert_eq!(m, TokenMaskPair::empty(3, 2));

        let m =
            masks_from_highlights(&s, &hs(&[PhrasePair::source_only(Span::new(0, 2))])).unwrap();
        assert_eq!(m.src_mask, [true, true, false]);
        assert_eq!(m.tgt_mask, [false, false]);

        let m = masks_from_highlights(
            &s,
            &hs(&[
                PhrasePair::new(Span::new(0, 1), Span::new(1, 2)),
                PhrasePair::source_only(Span::new(2, 3)),
            ]),
        )
        .unwrap();
        assert_eq!(m.src_mask, [true, false, true]);
        assert_eq!(m.tgt_mask, [false, true]);
    }

    #[test]
    fn masks_shape_error() {
        let s = pair(&["a"], &["x"]);
        let r = masks_from_highlights(&s, &hs(&[PhrasePair::source_only(Span::new(0, 2))]));
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn span_serialises_as_array() {
        let p = PhrasePair::new(Span::new(1, 3), Span::EMPTY);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"src":[1,3],"tgt":[0,0]}"#
        );
        let back: PhrasePair = serde_json::from_str(r#"{"src":[1,3],"tgt":[4,4]}"#).unwrap();
        assert_eq!(back, p);
    }
}
