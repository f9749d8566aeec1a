//! Synthetic corpora with planted divergences, for tests, demos and benches.
//!
//! Matched words come from a bijective lexicon (`s<k>` <-> `t<k>`) and are
//! aligned one-to-one in order. A planted divergence is a block of source
//! tokens `xs<k>` and target tokens `xt<k>` missing from the lexicon, with
//! every planted source token linked to every planted target token, so any
//! consistent phrase pair contains either all of the block or none of it.
//! Divergent instances get enough planted material that the lexical scorer
//! rates them `<= 0`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::Label;
use crate::io::CorpusInstance;
use crate::phrase_table::Alignment;
use crate::scorer::BilingualLexicon;
use crate::types::{SentencePair, TokenMaskPair};

pub const VOCAB: usize = 200;

pub fn lexicon() -> BilingualLexicon {
    BilingualLexicon::from_pairs((0..VOCAB).map(|k| (format!("s{k}"), format!("t{k}"))))
}

#[derive(Clone, Debug)]
enum Piece {
    Word(usize),
    Block { src: usize, tgt: usize },
}

struct Builder {
    src: Vec<String>,
    tgt: Vec<String>,
    links: Vec<(usize, usize)>,
    gold: (Vec<bool>, Vec<bool>),
    planted: usize,
}

fn build(pieces: &[Piece]) -> Builder {
    let mut b = Builder {
        src: Vec::new(),
        tgt: Vec::new(),
        links: Vec::new(),
        gold: (Vec::new(), Vec::new()),
        planted: 0,
    };
    for piece in pieces {
        match *piece {
            Piece::Word(k) => {
                b.links.push((b.src.len(), b.tgt.len()));
                b.src.push(format!("s{k}"));
                b.tgt.push(format!("t{k}"));
                b.gold.0.push(false);
                b.gold.1.push(false);
            }
            Piece::Block { src, tgt } => {
                let (s0, t0) = (b.src.len(), b.tgt.len());
                for i in 0..src {
                    b.src.push(format!("xs{}", b.planted + i));
                    b.gold.0.push(true);
                }
                for j in 0..tgt {
                    b.tgt.push(format!("xt{}", b.planted + j));
                    b.gold.1.push(true);
                }
                b.planted += src.max(tgt);
                for i in s0..s0 + src {
                    for j in t0..t0 + tgt {
                        b.links.push((i, j));
                    }
                }
            }
        }
    }
    b
}

fn instance(id: String, pieces: &[Piece], label: Label) -> CorpusInstance {
    let b = build(pieces);
    let mut inst =
        CorpusInstance::new(SentencePair::new(id, b.src, b.tgt).with_langs("src", "tgt"));
    inst.alignment = Some(Alignment::from_links(b.links));
    inst.gold_masks = Some(TokenMaskPair {
        src_mask: b.gold.0,
        tgt_mask: b.gold.1,
    });
    inst.gold_label = Some(label);
    inst
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> Vec<Piece> {
    let mut ks: Vec<usize> = (0..VOCAB).collect();
    ks.shuffle(rng);
    ks.truncate(n);
    ks.into_iter().map(Piece::Word).collect()
}

/// Splits `total >= 2` planted tokens over both sides, at least one each.
fn split(rng: &mut ChaCha8Rng, total: usize) -> (usize, usize) {
    let src = rng.random_range(1..total);
    (src, total - src)
}

/// Alternating equivalent and divergent instances; each divergent one has a
/// single planted block whose tokens are the gold rationale.
pub fn planted_corpus(n: usize, seed: u64) -> Vec<CorpusInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let id = format!("planted-{k:04}");
            if k % 2 == 0 {
                let m = rng.random_range(2..=7);
                instance(id, &words(&mut rng, m), Label::Equivalent)
            } else {
                let m = rng.random_range(1..=4);
                let planted = rng.random_range(2 * m..=2 * m + 2);
                let (src, tgt) = split(&mut rng, planted);
                let mut pieces = words(&mut rng, m);
                let at = rng.random_range(0..=m);
                pieces.insert(at, Piece::Block { src, tgt });
                instance(id, &pieces, Label::Divergent)
            }
        })
        .collect()
}

/// Divergent instances with two planted blocks separated by several matched
/// words: a large block that makes the pair divergent and a small one.
/// Erasing everything at once needs a long phrase spanning both blocks.
pub fn multi_phrase_corpus(n: usize, seed: u64) -> Vec<CorpusInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let m = rng.random_range(4..=8);
            let gap = rng.random_range(2..m);
            let small = rng.random_range(2..=3);
            let large = rng.random_range(2 * m - small..=2 * m - small + 2).max(2);
            let (ls, lt) = split(&mut rng, large);
            let (ss, st) = split(&mut rng, small);
            let mut blocks = [
                Piece::Block { src: ls, tgt: lt },
                Piece::Block { src: ss, tgt: st },
            ];
            if rng.random_bool(0.5) {
                blocks.swap(0, 1);
            }
            let ws = words(&mut rng, m);
            let outer = m - gap;
            let before = rng.random_range(0..=outer);
            let mut pieces: Vec<Piece> = ws[..before].to_vec();
            pieces.push(blocks[0].clone());
            pieces.extend_from_slice(&ws[before..before + gap]);
            pieces.push(blocks[1].clone());
            pieces.extend_from_slice(&ws[before + gap..]);
            instance(format!("multi-{k:04}"), &pieces, Label::Divergent)
        })
        .collect()
}
