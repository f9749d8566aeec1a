//! The ranker contract and its implementations.
//!
//! Every scorer maps sentence pairs to finite reals with a fixed sign
//! convention: `> 0` means the pair is treated as equivalent, `< 0` as
//! divergent. External models must be shifted so that zero separates the two.

mod external;
mod lexical;
pub mod wire;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

pub use external::{Endpoint, ExternalScorer, ExternalScorerConfig};
pub use lexical::{lexical_score, BilingualLexicon, LexicalScorer};

use crate::error::Result;
use crate::types::SentencePair;

pub trait Scorer: Send + Sync {
    /// One score per pair, in input order.
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>>;

    fn score(&self, pair: &SentencePair) -> Result<f64> {
        Ok(self.score_batch(std::slice::from_ref(pair))?[0])
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        (**self).score_batch(pairs)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        (**self).score_batch(pairs)
    }
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        (**self).score_batch(pairs)
    }
}

type TokenKey = (Vec<String>, Vec<String>);

/// Memoises any scorer on exact token sequences. Misses are forwarded in a
/// single batch per call, deduplicated.
pub struct Memoized<S> {
    inner: S,
    cache: Mutex<HashMap<TokenKey, f64>>,
    misses: AtomicUsize,
    hits: AtomicUsize,
}

impl<S: Scorer> Memoized<S> {
    pub fn new(inner: S) -> Self {
        Memoized {
            inner,
            cache: Mutex::new(HashMap::new()),
            misses: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

impl<S: Scorer> Scorer for Memoized<S> {
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        let keys: Vec<TokenKey> = pairs
            .iter()
            .map(|p| (p.src.clone(), p.tgt.clone()))
            .collect();
        let mut todo: Vec<usize> = Vec::new();
        {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            for (k, key) in keys.iter().enumerate() {
                if !cache.contains_key(key) && seen.insert(key) {
                    todo.push(k);
                }
            }
        }
        if !todo.is_empty() {
            let batch: Vec<SentencePair> = todo.iter().map(|&k| pairs[k].clone()).collect();
            let scores = self.inner.score_batch(&batch)?;
            let mut cache = self.cache.lock().unwrap();
            for (&k, s) in todo.iter().zip(scores) {
                cache.insert(keys[k].clone(), s);
            }
        }
        self.misses.fetch_add(todo.len(), Ordering::Relaxed);
        self.hits
            .fetch_add(pairs.len() - todo.len(), Ordering::Relaxed);
        let cache = self.cache.lock().unwrap();
        Ok(keys.iter().map(|k| cache[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counting(AtomicUsize);

    impl Scorer for Counting {
        fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
            self.0.fetch_add(pairs.len(), Ordering::Relaxed);
            Ok(pairs.iter().map(|p| p.len() as f64).collect())
        }
    }

    #[test]
    fn memoized_dedups() {
        let m = Memoized::new(Counting(AtomicUsize::new(0)));
        let a = SentencePair::new("a", vec!["x"], vec!["y"]);
        let b = SentencePair::new("b", vec!["x", "z"], vec!["y"]);
        let out = m.score_batch(&[a.clone(), b.clone(), a.clone()]).unwrap();
        assert_eq!(out, [2.0, 3.0, 2.0]);
        assert_eq!(m.inner().0.load(Ordering::Relaxed), 2);
        m.score_batch(&[b, a]).unwrap();
        assert_eq!(m.inner().0.load(Ordering::Relaxed), 2);
        assert_eq!(m.hits(), 3);
        assert!(m.score_batch(&[]).unwrap().is_empty());
    }
}
