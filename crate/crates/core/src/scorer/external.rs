use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::scorer::wire::{WireRequest, WireResponse};
use crate::scorer::Scorer;
use crate::types::SentencePair;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// Program and arguments; spoken to over stdin/stdout.
    Subprocess(Vec<String>),
    /// Full URL of the `POST /score` endpoint.
    Http(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalScorerConfig {
    pub endpoint: Endpoint,
    pub timeout_ms: u64,
}

impl ExternalScorerConfig {
    pub fn subprocess<S: Into<String>>(argv: impl IntoIterator<Item = S>) -> Self {
        ExternalScorerConfig {
            endpoint: Endpoint::Subprocess(argv.into_iter().map(Into::into).collect()),
            timeout_ms: 30_000,
        }
    }

    pub fn http(url: impl Into<String>) -> Self {
        ExternalScorerConfig {
            endpoint: Endpoint::Http(url.into()),
            timeout_ms: 30_000,
        }
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Self {
        self.timeout_ms = ms;
        self
    }
}

trait Transport: Send {
    fn exchange(&mut self, reqs: &[WireRequest]) -> Result<Vec<WireResponse>>;
}

struct SubprocessTransport {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    line_no: usize,
}

impl SubprocessTransport {
    fn spawn(argv: &[String], timeout: Duration) -> Result<Self> {
        let (prog, args) = argv
            .split_first()
            .ok_or_else(|| Error::Config("empty scorer command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessTransport {
            child,
            stdin,
            lines: rx,
            timeout,
            line_no: 0,
        })
    }

    fn next_line(&mut self) -> Result<String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => {
                self.line_no += 1;
                Ok(line?)
            }
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(self.timeout.as_millis() as u64)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Protocol("scorer process closed its output".into()))
            }
        }
    }
}

impl Transport for SubprocessTransport {
    fn exchange(&mut self, reqs: &[WireRequest]) -> Result<Vec<WireResponse>> {
        let mut buf = Vec::new();
        for r in reqs {
            serde_json::to_writer(&mut buf, r).expect("requests serialise");
            buf.push(b'\n');
        }
        buf.push(b'\n');
        self.stdin.write_all(&buf)?;
        self.stdin.flush()?;

        let mut out = Vec::with_capacity(reqs.len());
        loop {
            let line = self.next_line()?;
            if line.trim().is_empty() {
                break;
            }
            let resp: WireResponse = serde_json::from_str(&line).map_err(|e| {
                Error::Protocol(format!(
                    "malformed response line {}: {line:?} ({e})",
                    self.line_no
                ))
            })?;
            out.push(resp);
        }
        Ok(out)
    }
}

impl Drop for SubprocessTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    timeout_ms: u64,
}

impl Transport for HttpTransport {
    fn exchange(&mut self, reqs: &[WireRequest]) -> Result<Vec<WireResponse>> {
        let map_err = |e: reqwest::Error| {
            if e.is_timeout() {
                Error::Timeout(self.timeout_ms)
            } else {
                Error::Protocol(format!("http: {e}"))
            }
        };
        let resp = self
            .client
            .post(&self.url)
            .json(reqs)
            .send()
            .map_err(map_err)?;
        let status = resp.status();
        let body = resp.bytes().map_err(map_err)?;
        if !status.is_success() {
            return Err(Error::Protocol(format!(
                "http status {status}: {}",
                String::from_utf8_lossy(&body)
            )));
        }
        serde_json::from_slice(&body).map_err(|e| {
            Error::Protocol(format!(
                "malformed response body {:?} ({e})",
                String::from_utf8_lossy(&body)
            ))
        })
    }
}

/// Client for a scorer running in another process or behind HTTP.
///
/// Responses are cached on `(source text, target text)` for the lifetime of
/// the client, so repeated pairs cost one wire round trip. Wire calls are
/// serialised internally.
pub struct ExternalScorer {
    transport: Mutex<Box<dyn Transport>>,
    cache: Mutex<HashMap<(String, String), f64>>,
    wire_calls: AtomicUsize,
    wire_pairs: AtomicUsize,
}

impl ExternalScorer {
    pub fn connect(cfg: &ExternalScorerConfig) -> Result<Self> {
        let timeout = Duration::from_millis(cfg.timeout_ms);
        let transport: Box<dyn Transport> = match &cfg.endpoint {
            Endpoint::Subprocess(argv) => Box::new(SubprocessTransport::spawn(argv, timeout)?),
            Endpoint::Http(url) => Box::new(HttpTransport {
                client: reqwest::blocking::Client::builder()
                    .timeout(timeout)
                    .build()
                    .map_err(|e| Error::Config(format!("http client: {e}")))?,
                url: url.clone(),
                timeout_ms: cfg.timeout_ms,
            }),
        };
        Ok(ExternalScorer {
            transport: Mutex::new(transport),
            cache: Mutex::new(HashMap::new()),
            wire_calls: AtomicUsize::new(0),
            wire_pairs: AtomicUsize::new(0),
        })
    }

    /// Number of round trips made so far.
    pub fn wire_calls(&self) -> usize {
        self.wire_calls.load(Ordering::Relaxed)
    }

    /// Number of pairs sent over the wire so far.
    pub fn wire_pairs(&self) -> usize {
        self.wire_pairs.load(Ordering::Relaxed)
    }

    fn fetch(&self, keys: &[(String, String)]) -> Result<Vec<f64>> {
        let reqs: Vec<WireRequest> = keys
            .iter()
            .enumerate()
            .map(|(k, (src, tgt))| WireRequest {
                id: k.to_string(),
                src: src.clone(),
                tgt: tgt.clone(),
            })
            .collect();
        let resps = {
            let mut t = self.transport.lock().unwrap();
            self.wire_calls.fetch_add(1, Ordering::Relaxed);
            self.wire_pairs.fetch_add(reqs.len(), Ordering::Relaxed);
            t.exchange(&reqs)?
        };
        if resps.len() != reqs.len() {
            return Err(Error::LengthMismatch {
                expected: reqs.len(),
                got: resps.len(),
            });
        }
        let mut scores = vec![None; reqs.len()];
        for r in resps {
            let slot = r
                .id
                .parse::<usize>()
                .ok()
                .and_then(|k| scores.get_mut(k))
                .ok_or_else(|| Error::Protocol(format!("response for unknown id {:?}", r.id)))?;
            if slot.is_some() {
                return Err(Error::Protocol(format!(
                    "duplicate response for id {:?}",
                    r.id
                )));
            }
            if !r.score.is_finite() {
                return Err(Error::Protocol(format!(
                    "non-finite score for id {:?}",
                    r.id
                )));
            }
            *slot = Some(r.score);
        }
        Ok(scores
            .into_iter()
            .map(|s| s.expect("all ids answered"))
            .collect())
    }
}

impl Scorer for ExternalScorer {
    fn score_batch(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        let keys: Vec<(String, String)> =
            pairs.iter().map(|p| (p.src_text(), p.tgt_text())).collect();
        let missing: Vec<(String, String)> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = HashSet::new();
            keys.iter()
                .filter(|k| !cache.contains_key(*k) && seen.insert(*k))
                .cloned()
                .collect()
        };
        if !missing.is_empty() {
            let scores = self.fetch(&missing)?;
            let mut cache = self.cache.lock().unwrap();
            cache.extend(missing.into_iter().zip(scores));
        }
        let cache = self.cache.lock().unwrap();
        Ok(keys.iter().map(|k| cache[k]).collect())
    }
}
