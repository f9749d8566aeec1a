//! Append-only line logs: one file per record kind, each line a JSON record
//! in the same format the command-line tools read. Appends are synced to
//! disk before the caller acknowledges them.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use phrasal::eval::AnnotationRecord;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Result, ServiceError};
use crate::session::{StudySession, SurveyResponse};

pub const SESSIONS: &str = "sessions.jsonl";
pub const ANNOTATIONS: &str = "annotations.jsonl";
pub const SURVEYS: &str = "surveys.jsonl";

struct Log {
    path: PathBuf,
    file: File,
}

impl Log {
    /// Opens `path` for appending and returns the records already in it.
    /// A torn final line (no trailing newline) was never acknowledged and
    /// is cut off.
    fn open<T: DeserializeOwned>(path: PathBuf) -> Result<(Log, Vec<T>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let complete = text.rfind('\n').map_or(0, |k| k + 1);
        if complete < text.len() {
            file.set_len(complete as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        let mut records = Vec::new();
        for (n, line) in text[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(line).map_err(|e| {
                ServiceError::Storage(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: line {}: {e}", path.display(), n + 1),
                ))
            })?;
            records.push(rec);
        }
        Ok((Log { path, file }, records))
    }

    fn append<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let mut line = serde_json::to_vec(record).expect("records serialise");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Records found in the logs at startup, in append order.
#[derive(Default)]
pub struct Replay {
    pub sessions: Vec<StudySession>,
    pub annotations: Vec<AnnotationRecord>,
    pub surveys: Vec<SurveyResponse>,
}

/// Durable store, or an in-memory stand-in that keeps nothing.
pub struct Store {
    logs: Option<[Log; 3]>,
}

impl Store {
    pub fn ephemeral() -> Self {
        Store { logs: None }
    }

    pub fn open(dir: &Path) -> Result<(Store, Replay)> {
        std::fs::create_dir_all(dir)?;
        let (sessions_log, sessions) = Log::open(dir.join(SESSIONS))?;
        let (annotations_log, annotations) = Log::open(dir.join(ANNOTATIONS))?;
        let (surveys_log, surveys) = Log::open(dir.join(SURVEYS))?;
        let store = Store {
            logs: Some([sessions_log, annotations_log, surveys_log]),
        };
        Ok((
            store,
            Replay {
                sessions,
                annotations,
                surveys,
            },
        ))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.logs.as_ref().and_then(|l| l[0].path.parent())
    }

    fn append<T: Serialize>(&mut self, k: usize, record: &T) -> Result<()> {
        match &mut self.logs {
            Some(logs) => logs[k].append(record),
            None => Ok(()),
        }
    }

    pub fn append_session(&mut self, s: &StudySession) -> Result<()> {
        self.append(0, s)
    }

    pub fn append_annotation(&mut self, r: &AnnotationRecord) -> Result<()> {
        self.append(1, r)
    }

    pub fn append_survey(&mut self, s: &SurveyResponse) -> Result<()> {
        self.append(2, s)
    }
}
