use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::TokenMaskPair;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn observe(&mut self, pred: bool, gold: bool) {
        match (pred, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    /// Precision, recall and F1. An empty gold set has recall 1, and
    /// precision 1 only if the prediction is empty as well.
    pub fn prf(&self) -> Prf {
        let gold = self.tp + self.fn_;
        let pred = self.tp + self.fp;
        let recall = if gold == 0 {
            1.0
        } else {
            self.tp as f64 / gold as f64
        };
        let precision = match (pred, gold) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            _ => self.tp as f64 / pred as f64,
        };
        Prf::new(precision, recall)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    Micro,
    Macro,
}

impl std::str::FromStr for AverageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(AverageMode::Micro),
            "macro" => Ok(AverageMode::Macro),
            _ => Err(Error::Config(format!("unknown averaging mode {s:?}"))),
        }
    }
}

pub fn instance_counts(pred: &TokenMaskPair, gold: &TokenMaskPair) -> Result<Counts> {
    gold.same_shape(pred)?;
    let mut c = Counts::default();
    for (p, g) in pred.iter().zip(gold.iter()) {
        c.observe(p, g);
    }
    Ok(c)
}

/// Token-level agreement with gold rationales, both sides of an instance
/// pooled into one token set.
pub fn token_prf(
    preds: &[TokenMaskPair],
    golds: &[TokenMaskPair],
    mode: AverageMode,
) -> Result<Prf> {
    if preds.len() != golds.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} gold instances",
            preds.len(),
            golds.len()
        )));
    }
    let counts = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| instance_counts(p, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(match mode {
        AverageMode::Micro => {
            let mut total = Counts::default();
            counts.iter().for_each(|c| total.add(*c));
            total.prf()
        }
        AverageMode::Macro => {
            if counts.is_empty() {
                return Ok(Prf::new(0.0, 0.0));
            }
            let n = counts.len() as f64;
            let per: Vec<Prf> = counts.iter().map(Counts::prf).collect();
            Prf {
                precision: per.iter().map(|p| p.precision).sum::<f64>() / n,
                recall: per.iter().map(|p| p.recall).sum::<f64>() / n,
                f1: per.iter().map(|p| p.f1).sum::<f64>() / n,
            }
        }
    })
}

/// Mean highlighted tokens per instance and mean highlighted fraction of
/// the pair's tokens.
pub fn minimality(masks: &[TokenMaskPair], lengths: &[(usize, usize)]) -> Result<(f64, f64)> {
    if masks.len() != lengths.len() {
        return Err(Error::Shape(format!(
            "{} masks for {} pairs",
            masks.len(),
            lengths.len()
        )));
    }
    if masks.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut tokens = 0.0;
    let mut fraction = 0.0;
    for (m, &(ns, nt)) in masks.iter().zip(lengths) {
        m.check_shape(ns, nt)?;
        let k = m.count() as f64;
        tokens += k;
        fraction += k / (ns + nt) as f64;
    }
    let n = masks.len() as f64;
    Ok((tokens / n, fraction / n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_instances: usize,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub mean_tokens: f64,
    pub mean_fraction: f64,
}

pub fn evaluate(preds: &[TokenMaskPair], golds: &[TokenMaskPair]) -> Result<EvalReport> {
    let lengths: Vec<(usize, usize)> = golds
        .iter()
        .map(|g| (g.src_mask.len(), g.tgt_mask.len()))
        .collect();
    let (mean_tokens, mean_fraction) = minimality(preds, &lengths)?;
    Ok(EvalReport {
        n_instances: preds.len(),
        micro: token_prf(preds, golds, AverageMode::Micro)?,
        macro_: token_prf(preds, golds, AverageMode::Macro)?,
        mean_tokens,
        mean_fraction,
    })
}
