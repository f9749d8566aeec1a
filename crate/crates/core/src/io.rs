//! Line-delimited JSON record files and the toy aligner.
//!
//! Corpus lines carry `id`, `src`, `tgt` (text or token arrays),
//! `src_lang`, `tgt_lang`, and optionally a Pharaoh `alignment`, gold masks
//! and a gold label. Highlight lines are serialised [`HighlightSet`]s; mask
//! lines are `{"id","src_mask","tgt_mask"}`, a subset of highlight lines, so
//! either can be evaluated.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{AnnotationRecord, Label, Sublabel};
use crate::phrase_table::{parse_alignment, Alignment};
use crate::scorer::BilingualLexicon;
use crate::types::{tokenize, HighlightSet, SentencePair, TokenMaskPair, TokenizeMode};

/// Parses every non-blank line of `reader` as one JSON record.
pub fn read_jsonl_from<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        out.push((n + 1, rec));
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let f = File::open(path)?;
    Ok(read_jsonl_from(BufReader::new(f))?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

pub fn write_jsonl_to<T: Serialize, W: Write>(mut w: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    write_jsonl_to(BufWriter::new(File::create(path)?), records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum TextOrTokens {
    Text(String),
    Tokens(Vec<String>),
}

impl TextOrTokens {
    fn tokens(&self) -> Result<Vec<String>> {
        match self {
            TextOrTokens::Text(t) => tokenize(t, TokenizeMode::Whitespace),
            TextOrTokens::Tokens(ts) if ts.is_empty() => Err(Error::EmptySentence),
            TextOrTokens::Tokens(ts) => Ok(ts.clone()),
        }
    }

    fn from_tokens(ts: &[String]) -> Self {
        if ts
            .iter()
            .any(|t| t.is_empty() || t.contains(char::is_whitespace))
        {
            TextOrTokens::Tokens(ts.to_vec())
        } else {
            TextOrTokens::Text(ts.join(" "))
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    id: String,
    src: TextOrTokens,
    tgt: TextOrTokens,
    #[serde(default)]
    src_lang: String,
    #[serde(default)]
    tgt_lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alignment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_src_mask: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_tgt_mask: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_sublabel: Option<Sublabel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusInstance {
    pub pair: SentencePair,
    pub alignment: Option<Alignment>,
    pub gold_masks: Option<TokenMaskPair>,
    pub gold_label: Option<Label>,
    pub gold_sublabel: Option<Sublabel>,
}

impl CorpusInstance {
    pub fn new(pair: SentencePair) -> Self {
        CorpusInstance {
            pair,
            alignment: None,
            gold_masks: None,
            gold_label: None,
            gold_sublabel: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.pair.id
    }

    /// Gold masks, or all-false masks when the instance has no rationale.
    pub fn gold_or_empty(&self) -> TokenMaskPair {
        self.gold_masks
            .clone()
            .unwrap_or_else(|| TokenMaskPair::for_pair(&self.pair))
    }

    fn from_line(line: CorpusLine, n: usize) -> Result<Self> {
        let at = |field: &str, e: Error| Error::Parse(format!("line {n}: field {field}: {e}"));
        let pair = SentencePair {
            id: line.id,
            src_lang: line.src_lang,
            tgt_lang: line.tgt_lang,
            src: line.src.tokens().map_err(|e| at("src", e))?,
            tgt: line.tgt.tokens().map_err(|e| at("tgt", e))?,
        };
        let alignment = line
            .alignment
            .map(|a| parse_alignment(&a, pair.src.len(), pair.tgt.len()))
            .transpose()
            .map_err(|e| at("alignment", e))?;
        let check = |field: &str, m: &Option<Vec<bool>>, len: usize| match m {
            Some(v) if v.len() != len => Err(Error::Parse(format!(
                "line {n}: field {field}: {} entries for {len} tokens",
                v.len()
            ))),
            _ => Ok(()),
        };
        check("gold_src_mask", &line.gold_src_mask, pair.src.len())?;
        check("gold_tgt_mask", &line.gold_tgt_mask, pair.tgt.len())?;
        let gold_masks = match (line.gold_src_mask, line.gold_tgt_mask) {
            (None, None) => None,
            (src, tgt) => Some(TokenMaskPair {
                src_mask: src.unwrap_or_else(|| vec![false; pair.src.len()]),
                tgt_mask: tgt.unwrap_or_else(|| vec![false; pair.tgt.len()]),
            }),
        };
        if line.gold_sublabel.is_some() && line.gold_label != Some(Label::Divergent) {
            return Err(Error::Parse(format!(
                "line {n}: field gold_sublabel: only allowed with gold_label divergent"
            )));
        }
        Ok(CorpusInstance {
            pair,
            alignment,
            gold_masks,
            gold_label: line.gold_label,
            gold_sublabel: line.gold_sublabel,
        })
    }

    fn to_line(&self) -> CorpusLine {
        CorpusLine {
            id: self.pair.id.clone(),
            src: TextOrTokens::from_tokens(&self.pair.src),
            tgt: TextOrTokens::from_tokens(&self.pair.tgt),
            src_lang: self.pair.src_lang.clone(),
            tgt_lang: self.pair.tgt_lang.clone(),
            alignment: self.alignment.as_ref().map(|a| a.to_string()),
            gold_src_mask: self.gold_masks.as_ref().map(|m| m.src_mask.clone()),
            gold_tgt_mask: self.gold_masks.as_ref().map(|m| m.tgt_mask.clone()),
            gold_label: self.gold_label,
            gold_sublabel: self.gold_sublabel,
        }
    }
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusInstance>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in read_jsonl_from::<CorpusLine, _>(reader)? {
        let inst = CorpusInstance::from_line(line, n)?;
        if !seen.insert(inst.pair.id.clone()) {
            return Err(Error::DuplicateId(inst.pair.id));
        }
        out.push(inst);
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusInstance>> {
    read_corpus(BufReader::new(File::open(path)?))
}

pub fn write_corpus_to<W: Write>(w: W, corpus: &[CorpusInstance]) -> Result<()> {
    let lines: Vec<CorpusLine> = corpus.iter().map(CorpusInstance::to_line).collect();
    write_jsonl_to(w, &lines)
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &[CorpusInstance]) -> Result<()> {
    let lines: Vec<CorpusLine> = corpus.iter().map(CorpusInstance::to_line).collect();
    write_jsonl(path, &lines)
}

pub fn write_highlights(path: impl AsRef<Path>, results: &[HighlightSet]) -> Result<()> {
    write_jsonl(path, results)
}

pub fn read_highlights(path: impl AsRef<Path>) -> Result<Vec<HighlightSet>> {
    read_jsonl(path)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub id: String,
    pub src_mask: Vec<bool>,
    pub tgt_mask: Vec<bool>,
}

impl MaskRecord {
    pub fn new(id: impl Into<String>, m: TokenMaskPair) -> Self {
        MaskRecord {
            id: id.into(),
            src_mask: m.src_mask,
            tgt_mask: m.tgt_mask,
        }
    }

    pub fn masks(&self) -> TokenMaskPair {
        TokenMaskPair {
            src_mask: self.src_mask.clone(),
            tgt_mask: self.tgt_mask.clone(),
        }
    }
}

/// Reads mask records; highlight files parse as mask files too.
pub fn read_masks(path: impl AsRef<Path>) -> Result<Vec<MaskRecord>> {
    read_jsonl(path)
}

pub fn write_masks(path: impl AsRef<Path>, records: &[MaskRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let recs: Vec<AnnotationRecord> = read_jsonl(path)?;
    for r in &recs {
        r.validate()?;
    }
    Ok(recs)
}

pub fn write_annotations(path: impl AsRef<Path>, records: &[AnnotationRecord]) -> Result<()> {
    write_jsonl(path, records)
}

/// Greedy left-to-right alignment: each source token links to the first
/// unlinked target token it matches in `lex` (or equals, ignoring case).
pub fn toy_align(pair: &SentencePair, lex: &BilingualLexicon) -> Alignment {
    let mut used = vec![false; pair.tgt.len()];
    let mut a = Alignment::new();
    for (i, s) in pair.src.iter().enumerate() {
        if let Some(j) = (0..pair.tgt.len()).find(|&j| !used[j] && lex.matches(s, &pair.tgt[j])) {
            used[j] = true;
            a.insert(i, j);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Highlight, PhrasePair, Span, StopReason};

    #[test]
    fn empty_corpus() {
        assert!(read_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn one_line() {
        let c = read_corpus(
            r#"{"id":"a","src":"the cat","tgt":["le","chat"],"src_lang":"en","tgt_lang":"fr","alignment":"0-0 1-1","gold_src_mask":[false,true],"gold_label":"divergent"}"#
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        let inst = &c[0];
        assert_eq!(inst.pair.src, ["the", "cat"]);
        assert_eq!(inst.pair.tgt_lang, "fr");
        assert_eq!(inst.alignment.as_ref().unwrap().len(), 2);
        assert_eq!(inst.gold_masks.as_ref().unwrap().tgt_mask, [false, false]);
        assert_eq!(inst.gold_label, Some(Label::Divergent));
    }

    #[test]
    fn wrong_mask_length() {
        let text =
            "\n{\"id\":\"a\",\"src\":\"x y\",\"tgt\":\"z\",\"gold_tgt_mask\":[true,false]}\n";
        let err = read_corpus(text.as_bytes()).unwrap_err().to_string();
        assert!(
            err.contains("line 2") && err.contains("gold_tgt_mask"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_and_bad_lines() {
        let text = "{\"id\":\"a\",\"src\":\"x\",\"tgt\":\"y\"}\n{\"id\":\"a\",\"src\":\"x\",\"tgt\":\"y\"}\n";
        assert!(matches!(
            read_corpus(text.as_bytes()),
            Err(Error::DuplicateId(_))
        ));
        let err = read_corpus("{\"id\":\"a\"}\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 1"), "{err}");
        let err = read_corpus("{\"id\":\"a\",\"src\":\"\",\"tgt\":\"y\"}\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("field src"), "{err}");
        let err = read_corpus(
            "{\"id\":\"a\",\"src\":\"x\",\"tgt\":\"y\",\"alignment\":\"0-3\"}\n".as_bytes(),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("field alignment"), "{err}");
    }

    #[test]
    fn corpus_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut inst = CorpusInstance::new(
            SentencePair::new("a", vec!["x", "y z"], vec!["w"]).with_langs("en", "fr"),
        );
        inst.alignment = Some(Alignment::from_links([(0, 0)]));
        inst.gold_masks = Some(TokenMaskPair {
            src_mask: vec![true, false],
            tgt_mask: vec![false],
        });
        inst.gold_label = Some(Label::Divergent);
        inst.gold_sublabel = Some(Sublabel::Added);
        let plain = CorpusInstance::new(SentencePair::new("b", vec!["p"], vec!["q"]));
        write_corpus(&path, &[inst.clone(), plain.clone()]).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), [inst, plain]);
    }

    #[test]
    fn highlights_roundtrip_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        write_highlights(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");

        let hs = HighlightSet {
            id: "r".into(),
            phrases: vec![Highlight {
                phrase: PhrasePair::new(Span::new(1, 2), Span::new(1, 4)),
                src_text: "cat".into(),
                tgt_text: "chien noir rapide".into(),
                score_del: 1.0,
                objective: 0.5,
            }],
            src_mask: vec![false, true],
            tgt_mask: vec![false, true, true, true],
            initial_score: -1.0 / 3.0,
            iterations: 1,
            stopped_by: StopReason::Equivalent,
        };
        write_highlights(&path, std::slice::from_ref(&hs)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["phrases"][0]["src"], serde_json::json!([1, 2]));
        assert_eq!(v["phrases"][0]["tgt_text"], "chien noir rapide");
        assert_eq!(v["stopped_by"], "equivalent");
        assert_eq!(read_highlights(&path).unwrap(), std::slice::from_ref(&hs));
        let masks = read_masks(&path).unwrap();
        assert_eq!(masks[0].masks(), hs.masks());
    }

    #[test]
    fn toy_aligner() {
        let lex = BilingualLexicon::from_pairs([("the", "le"), ("cat", "chat")]);
        let p = SentencePair::new("a", vec!["the", "cat"], vec!["le", "chat"]);
        assert_eq!(toy_align(&p, &lex), Alignment::from_links([(0, 0), (1, 1)]));
        let p = SentencePair::new("b", vec!["x"], vec!["y"]);
        assert!(toy_align(&p, &lex).is_empty());
        let p = SentencePair::new("c", vec!["cat", "cat"], vec!["chat"]);
        assert_eq!(toy_align(&p, &lex), Alignment::from_links([(0, 0)]));
    }
}
