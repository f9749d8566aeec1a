//! Unpaired bootstrap significance test.
//!
//! Resample `r` draws each group, with replacement, to its own size from
//! ChaCha8 seeded by `seed` on stream `r` (group A's indices first, then
//! B's). With `d_r = m(A*) - m(B*)`, the one-sided p-value for "A beats B" is
//! `(1 + #{d_r <= 0}) / (n + 1)`. Per-resample streams make the parallel and
//! sequential runs bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub p_value: f64,
    /// `m(A) - m(B)` on the original samples.
    pub observed_diff: f64,
    pub n_resamples: usize,
    pub n_nonpositive: usize,
}

fn resample<T: Clone>(items: &[T], rng: &mut ChaCha8Rng) -> Vec<T> {
    (0..items.len())
        .map(|_| items[rng.random_range(0..items.len())].clone())
        .collect()
}

fn resampled_diff<T, M>(a: &[T], b: &[T], metric: &M, seed: u64, r: usize) -> f64
where
    T: Clone,
    M: Fn(&[T]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let ra = resample(a, &mut rng);
    let rb = resample(b, &mut rng);
    metric(&ra) - metric(&rb)
}

fn finish(diffs: &[f64], observed_diff: f64) -> BootstrapResult {
    let n_nonpositive = diffs.iter().filter(|&&d| d <= 0.0).count();
    BootstrapResult {
        p_value: (1 + n_nonpositive) as f64 / (diffs.len() + 1) as f64,
        observed_diff,
        n_resamples: diffs.len(),
        n_nonpositive,
    }
}

fn check<T>(a: &[T], b: &[T], n_resamples: usize) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if n_resamples == 0 {
        return Err(Error::Config("n_resamples must be >= 1".into()));
    }
    Ok(())
}

pub fn bootstrap_test<T, M>(
    a: &[T],
    b: &[T],
    metric: M,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapResult>
where
    T: Clone + Send + Sync,
    M: Fn(&[T]) -> f64 + Send + Sync,
{
    check(a, b, n_resamples)?;
    let diffs = par::map_range(n_resamples, |r| resampled_diff(a, b, &metric, seed, r));
    Ok(finish(&diffs, metric(a) - metric(b)))
}

/// Single-threaded [`bootstrap_test`]; same result for the same seed.
pub fn bootstrap_test_seq<T, M>(
    a: &[T],
    b: &[T],
    metric: M,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapResult>
where
    T: Clone,
    M: Fn(&[T]) -> f64,
{
    check(a, b, n_resamples)?;
    let diffs = par::seq::map_range(n_resamples, |r| resampled_diff(a, b, &metric, seed, r));
    Ok(finish(&diffs, metric(a) - metric(b)))
}

pub fn bootstrap_pvalue<T, M>(
    a: &[T],
    b: &[T],
    metric: M,
    n_resamples: usize,
    seed: u64,
) -> Result<f64>
where
    T: Clone + Send + Sync,
    M: Fn(&[T]) -> f64 + Send + Sync,
{
    Ok(bootstrap_test(a, b, metric, n_resamples, seed)?.p_value)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
