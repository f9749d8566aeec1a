use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use phrasal::eval::{
    bootstrap_test, evaluate, instance_counts, judged, AnnotationRecord, AverageMode, Condition,
    Counts, EvalReport, Label, LabelMetric, DEFAULT_RESAMPLES,
};
use phrasal::io::{load_corpus, read_annotations, read_masks, CorpusInstance, MaskRecord};
use phrasal::{Error, TokenMaskPair};
use serde::Serialize;

use crate::commands::{emit, read_corpus_file};
use crate::config::{config, RunConfig};

/// Gold masks from a corpus file or a mask file.
fn load_gold_masks(path: &Path) -> Result<Vec<MaskRecord>> {
    std::fs::metadata(path).with_context(|| format!("reading gold {}", path.display()))?;
    match load_corpus(path) {
        Ok(corpus) => Ok(corpus
            .iter()
            .map(|c| MaskRecord::new(c.id(), c.gold_or_empty()))
            .collect()),
        Err(corpus_err) => read_masks(path).map_err(|mask_err| {
            Error::Parse(format!(
                "{}: neither a corpus ({corpus_err}) nor a mask file ({mask_err})",
                path.display()
            ))
            .into()
        }),
    }
}

/// Predictions reordered to follow `gold`, matched by id.
fn align_by_id(preds: Vec<MaskRecord>, gold: &[MaskRecord]) -> Result<Vec<TokenMaskPair>> {
    let mut by_id: HashMap<String, MaskRecord> = HashMap::new();
    for p in preds {
        if let Some(dup) = by_id.insert(p.id.clone(), p) {
            return Err(Error::DuplicateId(dup.id).into());
        }
    }
    let out = gold
        .iter()
        .map(|g| {
            by_id
                .remove(&g.id)
                .map(|p| p.masks())
                .ok_or_else(|| Error::Shape(format!("no prediction for instance {:?}", g.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = by_id.into_keys().min() {
        return Err(Error::MissingGold(extra).into());
    }
    Ok(out)
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Predicted masks or highlights.
    #[arg(long)]
    pub pred: PathBuf,
    /// Corpus with gold rationales, or a mask file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Averaging for the headline precision, recall and F1.
    #[arg(long)]
    pub mode: Option<AverageMode>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    mode: &'static str,
    precision: f64,
    recall: f64,
    f1: f64,
    #[serde(flatten)]
    report: EvalReport,
}

pub fn eval(a: EvalArgs, file: &RunConfig) -> Result<()> {
    let mode = match (a.mode, file.mode.as_deref()) {
        (Some(m), _) => m,
        (None, Some(m)) => m.parse()?,
        (None, None) => AverageMode::Micro,
    };
    let gold = load_gold_masks(&a.gold)?;
    let pred =
        read_masks(&a.pred).with_context(|| format!("reading predictions {}", a.pred.display()))?;
    let preds = align_by_id(pred, &gold)?;
    let golds: Vec<TokenMaskPair> = gold.iter().map(MaskRecord::masks).collect();
    let report = evaluate(&preds, &golds)?;
    let (name, prf) = match mode {
        AverageMode::Micro => ("micro", report.micro),
        AverageMode::Macro => ("macro", report.macro_),
    };
    let out = EvalOutput {
        mode: name,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        report,
    };
    emit(a.out.as_deref().or(file.out.as_deref()), &[out])
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// First group: annotation records or masks/highlights.
    #[arg(long, requires = "group_b", conflicts_with = "annotations")]
    pub group_a: Option<PathBuf>,
    #[arg(long, requires = "group_a")]
    pub group_b: Option<PathBuf>,
    /// Study export split by condition: with highlights is group A.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Corpus with gold labels or rationales.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Annotations: precision, recall, f1, accuracy. Masks: fraction,
    /// tokens, precision, recall, f1.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    path: String,
    n: usize,
    value: f64,
}

#[derive(Debug, Serialize)]
struct CompareOutput {
    metric: String,
    group_a: GroupSummary,
    group_b: GroupSummary,
    observed_diff: f64,
    p_value: f64,
    n_resamples: usize,
    seed: u64,
}

enum Records {
    Annotations(Vec<AnnotationRecord>),
    Masks(Vec<MaskRecord>),
}

fn sniff(path: &Path) -> Result<Records> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut first = None;
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            first = Some(line);
            break;
        }
    }
    let is_annotation = match first {
        None => false,
        Some(l) => serde_json::from_str::<serde_json::Value>(&l)
            .map_err(|e| Error::Parse(format!("{}: line 1: {e}", path.display())))?
            .get("annotator_id")
            .is_some(),
    };
    let ctx = || format!("reading {}", path.display());
    Ok(if is_annotation {
        Records::Annotations(read_annotations(path).with_context(ctx)?)
    } else {
        Records::Masks(read_masks(path).with_context(ctx)?)
    })
}

fn gold_labels(corpus: &[CorpusInstance]) -> HashMap<String, Label> {
    corpus
        .iter()
        .filter_map(|c| c.gold_label.map(|l| (c.id().to_string(), l)))
        .collect()
}

/// Per-unit values and the group metric over them.
enum Units {
    Labels(Vec<(Label, Label)>, LabelMetric),
    Counts(Vec<Counts>, LabelMetric),
    Values(Vec<f64>),
}

fn label_metric(name: &str) -> Result<LabelMetric> {
    Ok(name.parse()?)
}

fn units(records: Records, metric: &str, gold: Option<&[CorpusInstance]>) -> Result<Units> {
    match records {
        Records::Annotations(recs) => {
            let gold = gold.ok_or_else(|| config("comparing annotations needs --gold"))?;
            Ok(Units::Labels(
                judged(&recs, &gold_labels(gold))?,
                label_metric(metric)?,
            ))
        }
        Records::Masks(masks) => match metric {
            "fraction" | "tokens" => Ok(Units::Values(
                masks
                    .iter()
                    .map(|m| {
                        let n = m.masks().count() as f64;
                        if metric == "tokens" {
                            n
                        } else {
                            n / (m.src_mask.len() + m.tgt_mask.len()).max(1) as f64
                        }
                    })
                    .collect(),
            )),
            "precision" | "recall" | "f1" => {
                let gold =
                    gold.ok_or_else(|| config("comparing masks by agreement needs --gold"))?;
                let gold: Vec<MaskRecord> = gold
                    .iter()
                    .map(|c| MaskRecord::new(c.id(), c.gold_or_empty()))
                    .collect();
                let keep: std::collections::HashSet<&str> =
                    masks.iter().map(|m| m.id.as_str()).collect();
                let gold: Vec<MaskRecord> = gold
                    .into_iter()
                    .filter(|g| keep.contains(g.id.as_str()))
                    .collect();
                let preds = align_by_id(masks, &gold)?;
                let counts = preds
                    .iter()
                    .zip(&gold)
                    .map(|(p, g)| instance_counts(p, &g.masks()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Units::Counts(counts, label_metric(metric)?))
            }
            other => Err(config(format!("unknown mask metric {other:?}")).into()),
        },
    }
}

fn micro(cs: &[Counts], m: LabelMetric) -> f64 {
    let mut total = Counts::default();
    cs.iter().for_each(|c| total.add(*c));
    let prf = total.prf();
    match m {
        LabelMetric::Precision => prf.precision,
        LabelMetric::Recall => prf.recall,
        _ => prf.f1,
    }
}

pub fn compare(a: CompareArgs, file: &RunConfig) -> Result<()> {
    let resamples = a.resamples.or(file.resamples).unwrap_or(DEFAULT_RESAMPLES);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let gold = a.gold.as_deref().map(read_corpus_file).transpose()?;

    let (paths, ra, rb) = match (&a.group_a, &a.group_b, &a.annotations) {
        (Some(pa), Some(pb), None) => (
            (pa.display().to_string(), pb.display().to_string()),
            sniff(pa)?,
            sniff(pb)?,
        ),
        (None, None, Some(p)) => {
            let recs = read_annotations(p).with_context(|| format!("reading {}", p.display()))?;
            let (with, without) = recs
                .into_iter()
                .partition(|r| r.condition == Condition::WithHighlights);
            let name = p.display().to_string();
            (
                (
                    format!("{name}#with_highlights"),
                    format!("{name}#without_highlights"),
                ),
                Records::Annotations(with),
                Records::Annotations(without),
            )
        }
        _ => return Err(config("give --group-a and --group-b, or --annotations").into()),
    };
    let default_metric = match ra {
        Records::Annotations(_) => "f1",
        Records::Masks(_) => "fraction",
    };
    let metric = a
        .metric
        .clone()
        .or_else(|| file.metric.clone())
        .unwrap_or(default_metric.into());
    let (ua, ub) = (
        units(ra, &metric, gold.as_deref())?,
        units(rb, &metric, gold.as_deref())?,
    );

    let (na, nb, res, va, vb) = match (ua, ub) {
        (Units::Labels(x, m), Units::Labels(y, _)) => {
            let f = |s: &[(Label, Label)]| m.compute(s);
            (
                x.len(),
                y.len(),
                bootstrap_test(&x, &y, f, resamples, seed)?,
                f(&x),
                f(&y),
            )
        }
        (Units::Counts(x, m), Units::Counts(y, _)) => {
            let f = |s: &[Counts]| micro(s, m);
            (
                x.len(),
                y.len(),
                bootstrap_test(&x, &y, f, resamples, seed)?,
                f(&x),
                f(&y),
            )
        }
        (Units::Values(x), Units::Values(y)) => {
            let f = phrasal::eval::mean;
            (
                x.len(),
                y.len(),
                bootstrap_test(&x, &y, f, resamples, seed)?,
                f(&x),
                f(&y),
            )
        }
        _ => return Err(config("the two groups hold different kinds of records").into()),
    };
    let out = CompareOutput {
        metric,
        group_a: GroupSummary {
            path: paths.0,
            n: na,
            value: va,
        },
        group_b: GroupSummary {
            path: paths.1,
            n: nb,
            value: vb,
        },
        observed_diff: res.observed_diff,
        p_value: res.p_value,
        n_resamples: res.n_resamples,
        seed,
    };
    emit(a.out.as_deref().or(file.out.as_deref()), &[out])
}
