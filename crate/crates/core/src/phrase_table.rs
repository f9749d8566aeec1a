//! Aligned phrase tables.
//!
//! A two-sided phrase pair is *consistent* with a word alignment when it
//! contains at least one link and no link leaves it on either side. Tokens
//! without links are unaligned: they may be attached to the edges of a
//! consistent pair, and every maximal run of them also forms a one-sided
//! entry paired with an empty span on the other side.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::types::{PhrasePair, SentencePair, Span};

/// Word alignment links `(source index, target index)`, deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Alignment {
    links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_links(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Alignment {
            links: links.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        self.links.insert((i, j))
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn remove(&mut self, i: usize, j: usize) -> bool {
        self.links.remove(&(i, j))
    }

    /// Checks every link against the side lengths.
    pub fn validate(&self, src_len: usize, tgt_len: usize) -> Result<()> {
        match self
            .links
            .iter()
            .find(|(i, j)| *i >= src_len || *j >= tgt_len)
        {
            Some((i, j)) => Err(Error::Parse(format!(
                "alignment link {i}-{j} out of range for lengths {src_len}x{tgt_len}"
            ))),
            None => Ok(()),
        }
    }

    /// `aligned[i]` is true when source token `i` has at least one link.
    pub fn source_aligned(&self, src_len: usize) -> Vec<bool> {
        let mut out = vec![false; src_len];
        for &(i, _) in &self.links {
            out[i] = true;
        }
        out
    }

    pub fn target_aligned(&self, tgt_len: usize) -> Vec<bool> {
        let mut out = vec![false; tgt_len];
        for &(_, j) in &self.links {
            out[j] = true;
        }
        out
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, j)) in self.links.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

/// Parses Pharaoh-format links (`"0-0 1-2"`), validating indices.
pub fn parse_alignment(text: &str, src_len: usize, tgt_len: usize) -> Result<Alignment> {
    let mut a = Alignment::new();
    for tok in text.split_whitespace() {
        let parsed = tok
            .split_once('-')
            .and_then(|(i, j)| Some((i.parse::<usize>().ok()?, j.parse::<usize>().ok()?)));
        match parsed {
            Some((i, j)) if i < src_len && j < tgt_len => {
                a.insert(i, j);
            }
            Some(_) => {
                return Err(Error::Parse(format!(
                    "alignment link {tok:?} out of range for lengths {src_len}x{tgt_len}"
                )))
            }
            None => return Err(Error::Parse(format!("malformed alignment link {tok:?}"))),
        }
    }
    Ok(a)
}

/// Consistency predicate for two non-empty spans: at least one link inside
/// `src x tgt`, and no link with exactly one end inside.
pub fn is_consistent(src: Span, tgt: Span, a: &Alignment) -> bool {
    let mut inside = false;
    for (i, j) in a.links() {
        match (src.contains(i), tgt.contains(j)) {
            (true, true) => inside = true,
            (false, false) => {}
            _ => return false,
        }
    }
    inside
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhraseTable {
    pub pair_id: String,
    pub entries: BTreeSet<PhrasePair>,
}

impl PhraseTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PhrasePair> {
        self.entries.iter()
    }

    pub fn contains(&self, p: &PhrasePair) -> bool {
        self.entries.contains(p)
    }
}

fn within(len: usize, max_len: Option<usize>) -> bool {
    max_len.is_none_or(|m| len <= m)
}

/// Maximal runs of unaligned tokens as `[start, end)` spans.
fn unaligned_runs(aligned: &[bool]) -> Vec<Span> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &al) in aligned.iter().enumerate() {
        match (al, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                runs.push(Span::new(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(Span::new(s, aligned.len()));
    }
    runs
}

/// Extracts every phrase pair consistent with `a`, closed under attachment
/// of adjacent unaligned tokens, plus the maximal unaligned runs of each side
/// as one-sided entries. `max_len` caps each side's span length.
///
/// For each source span the projected target range is tight; the span is
/// accepted when no link from inside that range escapes the source span,
/// and the range is then widened over neighbouring unaligned target tokens.
/// Source-side attachment falls out of enumerating every source span.
pub fn extract_phrase_pairs(
    pair: &SentencePair,
    a: &Alignment,
    max_len: Option<usize>,
) -> PhraseTable {
    let (ns, nt) = (pair.src.len(), pair.tgt.len());
    let mut src_links = vec![Vec::new(); ns];
    let mut tgt_links = vec![Vec::new(); nt];
    for (i, j) in a.links() {
        src_links[i].push(j);
        tgt_links[j].push(i);
    }
    let tgt_aligned: Vec<bool> = tgt_links.iter().map(|l| !l.is_empty()).collect();
    let src_aligned: Vec<bool> = src_links.iter().map(|l| !l.is_empty()).collect();

    let mut entries = BTreeSet::new();
    for s1 in 0..ns {
        let mut tmin = usize::MAX;
        let mut tmax = 0;
        for (s2, links) in src_links.iter().enumerate().skip(s1) {
            if !within(s2 - s1 + 1, max_len) {
                break;
            }
            for &t in links {
                tmin = tmin.min(t);
                tmax = tmax.max(t);
            }
            if tmin == usize::MAX {
                continue;
            }
            if !within(tmax - tmin + 1, max_len) {
                // the projection only widens as the source span grows
                break;
            }
            let closed = (tmin..=tmax).all(|t| tgt_links[t].iter().all(|&s| s1 <= s && s <= s2));
            if !closed {
                continue;
            }
            let mut lo = tmin;
            while lo > 0 && !tgt_aligned[lo - 1] {
                lo -= 1;
            }
            let mut hi = tmax;
            while hi + 1 < nt && !tgt_aligned[hi + 1] {
                hi += 1;
            }
            for t1 in lo..=tmin {
                for t2 in tmax..=hi {
                    if within(t2 - t1 + 1, max_len) {
                        entries.insert(PhrasePair::new(
                            Span::new(s1, s2 + 1),
                            Span::new(t1, t2 + 1),
                        ));
                    }
                }
            }
        }
    }

    for run in unaligned_runs(&src_aligned) {
        if within(run.len(), max_len) {
            entries.insert(PhrasePair::source_only(run));
        }
    }
    for run in unaligned_runs(&tgt_aligned) {
        if within(run.len(), max_len) {
            entries.insert(PhrasePair::target_only(run));
        }
    }

    PhraseTable {
        pair_id: pair.id.clone(),
        entries,
    }
}

/// Reference enumeration: every span combination tested against
/// [`is_consistent`], plus every span that is a maximal unaligned run.
/// Quartic in sentence length; meant for tests.
pub fn extract_phrase_pairs_bruteforce(
    pair: &SentencePair,
    a: &Alignment,
    max_len: Option<usize>,
) -> PhraseTable {
    let (ns, nt) = (pair.src.len(), pair.tgt.len());
    let spans = |n: usize| -> Vec<Span> {
        (0..n)
            .flat_map(|s| (s + 1..=n).map(move |e| Span::new(s, e)))
            .filter(|sp| within(sp.len(), max_len))
            .collect()
    };
    let src_spans = spans(ns);
    let tgt_spans = spans(nt);

    let mut entries = BTreeSet::new();
    for &s in &src_spans {
        for &t in &tgt_spans {
            if is_consistent(s, t, a) {
                entries.insert(PhrasePair::new(s, t));
            }
        }
    }

    let is_max_unaligned_run = |sp: Span, aligned: &dyn Fn(usize) -> bool, n: usize| {
        sp.indices().all(|k| !aligned(k))
            && (sp.start == 0 || aligned(sp.start - 1))
            && (sp.end == n || aligned(sp.end))
    };
    let src_al = |i: usize| a.links().any(|(s, _)| s == i);
    let tgt_al = |j: usize| a.links().any(|(_, t)| t == j);
    for &s in &src_spans {
        if is_max_unaligned_run(s, &src_al, ns) {
            entries.insert(PhrasePair::source_only(s));
        }
    }
    for &t in &tgt_spans {
        if is_max_unaligned_run(t, &tgt_al, nt) {
            entries.insert(PhrasePair::target_only(t));
        }
    }

    PhraseTable {
        pair_id: pair.id.clone(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(s: usize, e: usize) -> Span {
        Span::new(s, e)
    }

    fn pp(s: (usize, usize), t: (usize, usize)) -> PhrasePair {
        PhrasePair::new(sp(s.0, s.1), sp(t.0, t.1))
    }

    fn pair(ns: usize, nt: usize) -> SentencePair {
        SentencePair::new(
            "t",
            (0..ns).map(|i| format!("s{i}")).collect(),
            (0..nt).map(|j| format!("t{j}")).collect(),
        )
    }

    #[test]
    fn parse() {
        let a = parse_alignment("0-0 1-2", 2, 3).unwrap();
        assert_eq!(a, Alignment::from_links([(0, 0), (1, 2)]));
        assert!(parse_alignment("", 2, 3).unwrap().is_empty());
        assert!(parse_alignment("0-0 0-0", 1, 1).unwrap().len() == 1);
        let err = parse_alignment("0-5", 2, 3).unwrap_err().to_string();
        assert!(err.contains("0-5"), "{err}");
        let err = parse_alignment("0-0 x-1", 2, 3).unwrap_err().to_string();
        assert!(err.contains("x-1"), "{err}");
        assert!(parse_alignment("0:1", 2, 3).is_err());
    }

    #[test]
    fn display_roundtrip() {
        let a = Alignment::from_links([(1, 2), (0, 0)]);
        assert_eq!(a.to_string(), "0-0 1-2");
        assert_eq!(parse_alignment(&a.to_string(), 2, 3).unwrap(), a);
    }

    #[test]
    fn consistency_predicate() {
        assert!(is_consistent(
            sp(0, 1),
            sp(0, 1),
            &Alignment::from_links([(0, 0)])
        ));
        assert!(!is_consistent(
            sp(0, 1),
            sp(0, 1),
            &Alignment::from_links([(0, 0), (0, 1)])
        ));
        assert!(is_consistent(
            sp(0, 2),
            sp(0, 2),
            &Alignment::from_links([(0, 1), (1, 0)])
        ));
        // no internal link
        assert!(!is_consistent(
            sp(1, 2),
            sp(1, 2),
            &Alignment::from_links([(0, 0)])
        ));
    }

    #[test]
    fn minimal_instance() {
        let t = extract_phrase_pairs(&pair(1, 1), &Alignment::from_links([(0, 0)]), None);
        assert_eq!(t.entries, BTreeSet::from([pp((0, 1), (0, 1))]));
    }

    #[test]
    fn unaligned_attachment() {
        let p = pair(2, 1);
        let a = Alignment::from_links([(0, 0)]);
        let expected = BTreeSet::from([
            pp((0, 1), (0, 1)),
            pp((0, 2), (0, 1)),
            PhrasePair::source_only(sp(1, 2)),
        ]);
        assert_eq!(extract_phrase_pairs(&p, &a, None).entries, expected);
        assert_eq!(
            extract_phrase_pairs_bruteforce(&p, &a, None).entries,
            expected
        );
    }

    #[test]
    fn crossing_links() {
        let p = pair(3, 3);
        let a = Alignment::from_links([(0, 0), (1, 2), (2, 1)]);
        let expected = BTreeSet::from([
            pp((0, 1), (0, 1)),
            pp((1, 2), (2, 3)),
            pp((2, 3), (1, 2)),
            pp((1, 3), (1, 3)),
            pp((0, 3), (0, 3)),
        ]);
        let fast = extract_phrase_pairs(&p, &a, None);
        assert_eq!(fast.entries, expected);
        assert_eq!(extract_phrase_pairs_bruteforce(&p, &a, None), fast);
        // [0,2) x [0,2) would cut the crossing link (1,2)
        assert!(!fast.contains(&pp((0, 2), (0, 2))));
    }

    #[test]
    fn empty_alignment_gives_whole_sides() {
        let p = pair(3, 2);
        let t = extract_phrase_pairs(&p, &Alignment::new(), None);
        let expected = BTreeSet::from([
            PhrasePair::source_only(sp(0, 3)),
            PhrasePair::target_only(sp(0, 2)),
        ]);
        assert_eq!(t.entries, expected);
        assert_eq!(
            extract_phrase_pairs_bruteforce(&p, &Alignment::new(), None).entries,
            expected
        );
    }

    #[test]
    fn diagonal_with_unit_cap() {
        let n = 5;
        let a = Alignment::from_links((0..n).map(|i| (i, i)));
        let t = extract_phrase_pairs(&pair(n, n), &a, Some(1));
        let expected: BTreeSet<_> = (0..n).map(|i| pp((i, i + 1), (i, i + 1))).collect();
        assert_eq!(t.entries, expected);
    }

    #[test]
    fn max_len_caps_both_sides() {
        let p = pair(4, 4);
        let a = Alignment::from_links([(0, 0), (1, 1), (2, 2), (3, 3)]);
        for cap in 1..=4 {
            let t = extract_phrase_pairs(&p, &a, Some(cap));
            assert!(t.iter().all(|e| e.src.len() <= cap && e.tgt.len() <= cap));
            assert_eq!(t, extract_phrase_pairs_bruteforce(&p, &a, Some(cap)));
        }
    }
}
