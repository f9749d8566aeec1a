use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    /// Chance agreement was 1, so kappa is undefined. `value` is then 1
    /// when the raters agree everywhere and 0 otherwise.
    pub degenerate: bool,
}

/// Cohen's kappa between two raters over the same items.
pub fn cohen_kappa<L: Eq + Hash>(a: &[L], b: &[L]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let n = a.len() as f64;
    let mut ma: HashMap<&L, usize> = HashMap::new();
    let mut mb: HashMap<&L, usize> = HashMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
        if x == y {
            agree += 1;
        }
    }
    let po = agree as f64 / n;
    let pe: f64 = ma
        .iter()
        .map(|(l, &ca)| ca as f64 * mb.get(l).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - pe).abs() < 1e-12 {
        return Ok(Kappa {
            value: if agree == a.len() { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    Ok(Kappa {
        value: (po - pe) / (1.0 - pe),
        degenerate: false,
    })
}

/// Mean of pairwise Cohen's kappa over all rater pairs.
pub fn mean_pairwise_kappa<L: Eq + Hash>(raters: &[Vec<L>]) -> Result<Kappa> {
    if raters.len() < 2 {
        return Err(Error::Config(format!(
            "need at least two raters, got {}",
            raters.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut degenerate = false;
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            let k = cohen_kappa(&raters[i], &raters[j])?;
            sum += k.value;
            degenerate |= k.degenerate;
            count += 1;
        }
    }
    Ok(Kappa {
        value: sum / count as f64,
        degenerate,
    })
}
