//! Line-delimited JSON protocol spoken with external scorers.
//!
//! Stdio: the client writes one `{"id","src","tgt"}` object per line and a
//! blank line to close the batch; the server answers with one
//! `{"id","score"}` object per request followed by a blank line. HTTP: the
//! request body is a JSON array of request objects, the response a JSON
//! array of response objects. Ids are echoed back; order is not required.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::Scorer;
use crate::types::SentencePair;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: String,
    pub src: String,
    pub tgt: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: String,
    pub score: f64,
}

fn to_pair(r: &WireRequest) -> Result<SentencePair> {
    SentencePair::from_text(r.id.clone(), &r.src, &r.tgt)
}

/// Scores one batch of requests with `scorer`.
pub fn answer(scorer: &dyn Scorer, reqs: &[WireRequest]) -> Result<Vec<WireResponse>> {
    let pairs = reqs.iter().map(to_pair).collect::<Result<Vec<_>>>()?;
    let scores = scorer.score_batch(&pairs)?;
    Ok(reqs
        .iter()
        .zip(scores)
        .map(|(r, score)| WireResponse {
            id: r.id.clone(),
            score,
        })
        .collect())
}

/// HTTP handler body: JSON array in, JSON array out.
pub fn answer_json(scorer: &dyn Scorer, body: &[u8]) -> Result<Vec<u8>> {
    let reqs: Vec<WireRequest> = serde_json::from_slice(body)
        .map_err(|e| Error::Protocol(format!("bad request body: {e}")))?;
    let resp = answer(scorer, &reqs)?;
    Ok(serde_json::to_vec(&resp).expect("responses serialise"))
}

/// Serves the stdio variant until `input` hits EOF.
pub fn serve_lines<R: BufRead, W: Write>(
    scorer: &dyn Scorer,
    input: R,
    mut output: W,
) -> Result<()> {
    let mut batch = Vec::new();
    let flush = |batch: &mut Vec<WireRequest>, out: &mut W| -> Result<()> {
        for r in answer(scorer, batch)? {
            serde_json::to_writer(&mut *out, &r).map_err(|e| Error::Protocol(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        out.write_all(b"\n")?;
        out.flush()?;
        batch.clear();
        Ok(())
    };
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            flush(&mut batch, &mut output)?;
            continue;
        }
        let req: WireRequest = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("request line {}: {e}: {line}", n + 1)))?;
        batch.push(req);
    }
    if !batch.is_empty() {
        flush(&mut batch, &mut output)?;
    }
    Ok(())
}
