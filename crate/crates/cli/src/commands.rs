use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use phrasal::baselines::{leave_one_out_corpus, random_corpus, BaselineConfig, BaselineKind};
use phrasal::extractor::extract_corpus;
use phrasal::io::{
    load_corpus, toy_align, write_corpus, write_corpus_to, write_jsonl_to, CorpusInstance,
    MaskRecord,
};
use phrasal::{synth, ExtractorConfig};
use phrasal_service::{ServiceConfig, Study, StudyService};
use serde::Serialize;

use crate::config::{config, RunConfig, ScorerArgs};

pub fn read_corpus_file(path: &Path) -> Result<Vec<CorpusInstance>> {
    load_corpus(path).with_context(|| format!("reading corpus {}", path.display()))
}

/// Writes records to `out`, or to stdout without one.
pub fn emit<T: Serialize>(out: Option<&Path>, records: &[T]) -> Result<()> {
    match out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_jsonl_to(&mut w, records)?;
            w.flush()?;
        }
        None => write_jsonl_to(io::stdout().lock(), records)?,
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct ExtractArgs {
    /// Corpus with alignments (see `align-toy`).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Highlights file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    /// Minimum score gain for an erasure to count.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Rank erasures by score alone.
    #[arg(long)]
    pub no_brevity_reward: bool,
    #[arg(long)]
    pub max_phrase_len: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Accepted for symmetry with the other commands; extraction is
    /// deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn extract(a: ExtractArgs, file: &RunConfig) -> Result<()> {
    let defaults = ExtractorConfig::default();
    let cfg = ExtractorConfig {
        epsilon: a.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
        use_brevity_reward: !a.no_brevity_reward && file.brevity_reward.unwrap_or(true),
        max_iterations: a
            .max_iterations
            .or(file.max_iterations)
            .unwrap_or(defaults.max_iterations),
        max_phrase_len: a.max_phrase_len.or(file.max_phrase_len),
    };
    cfg.validate()?;
    let corpus = read_corpus_file(&a.corpus)?;
    let inputs = corpus
        .into_iter()
        .map(|inst| match inst.alignment {
            Some(al) => Ok((inst.pair, al)),
            None => Err(config(format!(
                "instance {:?} has no alignment; run align-toy first",
                inst.pair.id
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scorer = a.scorer.build(file)?;
    let hs = extract_corpus(&inputs, &scorer, &cfg)?;
    emit(a.out.as_deref().or(file.out.as_deref()), &hs)?;
    let highlighted = hs.iter().filter(|h| !h.phrases.is_empty()).count();
    eprintln!(
        "extracted {} instances, {highlighted} with highlights",
        hs.len()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum KindArg {
    Random,
    Loo,
}

#[derive(Debug, clap::Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Mask file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Per-token masking probability of the random baseline.
    #[arg(long)]
    pub probability: Option<f64>,
    /// Minimum single-token score gain of the leave-one-out baseline.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
}

pub fn baseline(a: BaselineArgs, file: &RunConfig) -> Result<()> {
    let kind = match (a.kind, file.kind.as_deref()) {
        (Some(KindArg::Random), _) | (None, None | Some("random")) => BaselineKind::Random,
        (Some(KindArg::Loo), _) | (None, Some("loo")) => BaselineKind::LeaveOneOut,
        (None, Some(other)) => {
            return Err(config(format!("unknown baseline kind {other:?}")).into())
        }
    };
    let d = BaselineConfig::default();
    let cfg = BaselineConfig {
        kind,
        probability: a.probability.or(file.probability).unwrap_or(d.probability),
        threshold: a.threshold.or(file.threshold).unwrap_or(d.threshold),
        seed: a.seed.or(file.seed).unwrap_or(d.seed),
    };
    cfg.validate()?;
    let corpus = read_corpus_file(&a.corpus)?;
    let pairs: Vec<_> = corpus.into_iter().map(|c| c.pair).collect();
    let masks = match cfg.kind {
        BaselineKind::Random => random_corpus(&pairs, cfg.probability, cfg.seed),
        BaselineKind::LeaveOneOut => {
            leave_one_out_corpus(&pairs, &a.scorer.build(file)?, cfg.threshold)?
        }
    };
    let records: Vec<MaskRecord> = pairs
        .iter()
        .zip(masks)
        .map(|(p, m)| MaskRecord::new(&p.id, m))
        .collect();
    emit(a.out.as_deref().or(file.out.as_deref()), &records)
}

#[derive(Debug, clap::Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output corpus; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bilingual lexicon; identical words always match.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Realign instances that already carry an alignment.
    #[arg(long)]
    pub overwrite: bool,
}

pub fn align_toy(a: AlignArgs, file: &RunConfig) -> Result<()> {
    let lex = ScorerArgs {
        lexicon: a.lexicon.clone(),
        ..Default::default()
    }
    .lexicon(file)?;
    let mut corpus = read_corpus_file(&a.corpus)?;
    for inst in &mut corpus {
        if a.overwrite || inst.alignment.is_none() {
            inst.alignment = Some(toy_align(&inst.pair, &lex));
        }
    }
    emit_corpus(a.out.as_deref().or(file.out.as_deref()), &corpus)
}

fn emit_corpus(out: Option<&Path>, corpus: &[CorpusInstance]) -> Result<()> {
    match out {
        Some(p) => write_corpus(p, corpus)?,
        None => write_corpus_to(io::stdout().lock(), corpus)?,
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SynthKind {
    /// Alternating equivalent and single-block divergent instances.
    Planted,
    /// Divergent instances with two separated planted blocks.
    Multi,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "planted")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corpus file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the matching lexicon here.
    #[arg(long)]
    pub lexicon_out: Option<PathBuf>,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let corpus = match a.kind {
        SynthKind::Planted => synth::planted_corpus(a.n, a.seed),
        SynthKind::Multi => synth::multi_phrase_corpus(a.n, a.seed),
    };
    emit_corpus(a.out.as_deref(), &corpus)?;
    if let Some(p) = &a.lexicon_out {
        let mut w =
            BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
        for (s, t) in synth::lexicon().sorted_entries() {
            writeln!(w, "{s} {t}")?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Study corpus.
    #[arg(long)]
    pub data: PathBuf,
    /// Highlights shown in the with-highlights condition.
    #[arg(long)]
    pub highlights: Option<PathBuf>,
    /// Directory of the append-only logs; nothing persists without it.
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long, default_value = "study")]
    pub study: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Attention checks per session.
    #[arg(long, default_value_t = 2)]
    pub checks: usize,
}

pub fn serve(a: ServeArgs, file: &RunConfig) -> Result<()> {
    let study = Study::load(a.study.clone(), &a.data, a.highlights.as_deref())
        .with_context(|| format!("loading study data {}", a.data.display()))?;
    let cfg = ServiceConfig {
        seed: a.seed.or(file.seed).unwrap_or(0),
        attention_checks: a.checks,
    };
    let svc = Arc::new(StudyService::open(vec![study], cfg, a.store.as_deref())?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        eprintln!(
            "serving study {:?} on http://{}",
            a.study,
            listener.local_addr()?
        );
        phrasal_service::serve(listener, svc).await?;
        Ok(())
    })
}
