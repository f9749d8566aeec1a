//! Test support: random instances, an exhaustive single-step oracle for the
//! extractor and a throwaway HTTP scorer. Only built with the `testkit`
//! feature.
//!
//! The oracle deliberately avoids the extractor's code path: it enumerates
//! the brute-force phrase table, erases tokens by index filtering, scores
//! with [`lexical_score`] directly and applies the tie policy through an
//! explicit sort key.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::phrase_table::{extract_phrase_pairs_bruteforce, Alignment};
use crate::scorer::{lexical_score, wire, BilingualLexicon, LexicalScorer};
use crate::types::{PhrasePair, SentencePair};

/// Pair with side lengths in `1..=max_len` over a small vocabulary, plus a
/// random alignment with each link present independently.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    id: usize,
    max_len: usize,
    link_prob: f64,
) -> (SentencePair, Alignment) {
    let ns = rng.random_range(1..=max_len);
    let nt = rng.random_range(1..=max_len);
    let src: Vec<String> = (0..ns)
        .map(|_| format!("w{}", rng.random_range(0..6)))
        .collect();
    let tgt: Vec<String> = (0..nt)
        .map(|_| format!("v{}", rng.random_range(0..6)))
        .collect();
    let mut a = Alignment::new();
    for i in 0..ns {
        for j in 0..nt {
            if rng.random_bool(link_prob) {
                a.insert(i, j);
            }
        }
    }
    (SentencePair::new(format!("rand-{id}"), src, tgt), a)
}

/// Lexicon over the [`random_instance`] vocabulary: `w<k>` <-> `v<k>` for
/// a random subset of `k`, sometimes crossed.
pub fn random_lexicon(rng: &mut ChaCha8Rng) -> BilingualLexicon {
    let mut lex = BilingualLexicon::new();
    for k in 0..6 {
        if rng.random_bool(0.6) {
            lex.insert(&format!("w{k}"), &format!("v{k}"));
        }
        if rng.random_bool(0.15) {
            lex.insert(&format!("w{k}"), &format!("v{}", (k + 1) % 6));
        }
    }
    lex
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleChoice {
    pub phrase: PhrasePair,
    pub score_del: f64,
    pub objective: f64,
}

fn erase(pair: &SentencePair, p: &PhrasePair) -> SentencePair {
    let keep = |toks: &[String], s: usize, e: usize| -> Vec<String> {
        toks.iter()
            .enumerate()
            .filter(|(k, _)| *k < s || *k >= e)
            .map(|(_, t)| t.clone())
            .collect()
    };
    SentencePair::new(
        pair.id.clone(),
        keep(&pair.src, p.src.start, p.src.end),
        keep(&pair.tgt, p.tgt.start, p.tgt.end),
    )
}

/// First highlight by exhaustive search, or `None` when the pair already
/// scores `> 0` or no erasure beats the margin.
pub fn single_step_oracle(
    pair: &SentencePair,
    a: &Alignment,
    lex: &BilingualLexicon,
    epsilon: f64,
    brevity: bool,
    max_len: Option<usize>,
) -> Option<OracleChoice> {
    let base = lexical_score(pair, lex).ok()?;
    if base > 0.0 {
        return None;
    }
    let size = (pair.src.len() + pair.tgt.len()) as f64;
    let mut cands: Vec<OracleChoice> = extract_phrase_pairs_bruteforce(pair, a, max_len)
        .entries
        .into_iter()
        .filter(|p| p.src.len() < pair.src.len() && p.tgt.len() < pair.tgt.len())
        .filter_map(|p| {
            let s = lexical_score(&erase(pair, &p), lex).ok()?;
            if s <= base + epsilon {
                return None;
            }
            let len = (p.src.len() + p.tgt.len()) as f64;
            let br = if s >= 0.0 {
                (-len / size).exp()
            } else {
                (len / size).exp()
            };
            Some(OracleChoice {
                phrase: p,
                score_del: s,
                objective: if brevity { s * br } else { s },
            })
        })
        .collect();
    // best first: objective desc, score desc, length asc, (src start, tgt start) asc, spans asc
    cands.sort_by(|x, y| {
        y.objective
            .partial_cmp(&x.objective)
            .unwrap()
            .then(y.score_del.partial_cmp(&x.score_del).unwrap())
            .then(x.phrase.len().cmp(&y.phrase.len()))
            .then(x.phrase.src.start.cmp(&y.phrase.src.start))
            .then(x.phrase.tgt.start.cmp(&y.phrase.tgt.start))
            .then(x.phrase.cmp(&y.phrase))
    });
    cands.first().copied()
}

/// Minimal HTTP/1.1 server answering every POST with the wire protocol's
/// JSON array response, backed by a lexical scorer.
pub struct HttpStub {
    pub addr: SocketAddr,
    calls: Arc<AtomicUsize>,
}

impl HttpStub {
    pub fn start(lexicon: BilingualLexicon) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let addr = listener.local_addr().unwrap();
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = calls.clone();
        let scorer = LexicalScorer::new(lexicon);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_len = 0usize;
                let mut line = String::new();
                loop {
                    line.clear();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = l.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            content_len = v.trim().parse().unwrap_or(0);
                        }
                    }
                }
                let mut body = vec![0; content_len];
                if reader.read_exact(&mut body).is_err() {
                    continue;
                }
                counter.fetch_add(1, Ordering::SeqCst);
                let (status, out) = match wire::answer_json(&scorer, &body) {
                    Ok(out) => ("200 OK", out),
                    Err(e) => ("400 Bad Request", e.to_string().into_bytes()),
                };
                let head = format!(
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    out.len()
                );
                let _ = stream.write_all(head.as_bytes());
                let _ = stream.write_all(&out);
            }
        });
        HttpStub { addr, calls }
    }

    pub fn url(&self) -> String {
        format!("http://{}/score", self.addr)
    }

    /// Requests served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}
