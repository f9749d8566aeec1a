use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use phrasal::eval::{AnnotationRecord, Condition};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::session::{Ack, InstancePayload, SessionInfo, StudySession, SurveyResponse};
use crate::store::{Replay, Store};
use crate::study::Study;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Seed of the per-session permutations.
    pub seed: u64,
    /// Attention checks per session.
    pub attention_checks: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            seed: 0,
            attention_checks: 2,
        }
    }
}

struct Inner {
    store: Store,
    sessions: HashMap<String, StudySession>,
    created: usize,
    per_study: HashMap<String, usize>,
    annotations: Vec<AnnotationRecord>,
    surveys: Vec<SurveyResponse>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub studies: usize,
    pub sessions: usize,
    pub annotations: usize,
}

/// Study state shared by all handlers. Every mutation holds one lock, so
/// appends are serialised and each session changes atomically.
pub struct StudyService {
    studies: HashMap<String, Study>,
    cfg: ServiceConfig,
    inner: Mutex<Inner>,
}

impl StudyService {
    /// Service backed by the logs in `store_dir`, replaying what they hold;
    /// `None` keeps everything in memory.
    pub fn open(studies: Vec<Study>, cfg: ServiceConfig, store_dir: Option<&Path>) -> Result<Self> {
        let (store, replay) = match store_dir {
            Some(dir) => Store::open(dir)?,
            None => (Store::ephemeral(), Replay::default()),
        };
        let studies: HashMap<String, Study> =
            studies.into_iter().map(|s| (s.id.clone(), s)).collect();
        let mut inner = Inner {
            store,
            sessions: HashMap::new(),
            created: 0,
            per_study: HashMap::new(),
            annotations: Vec::new(),
            surveys: Vec::new(),
        };
        for s in replay.sessions {
            let study = studies
                .get(&s.study_id)
                .ok_or_else(|| ServiceError::StudyNotFound(s.study_id.clone()))?;
            if let Some(bad) = s.order.iter().find(|id| study.position(id).is_none()) {
                return Err(ServiceError::Validation(format!(
                    "stored session {:?} refers to unknown instance {bad:?}",
                    s.session_id
                )));
            }
            inner.created += 1;
            *inner.per_study.entry(s.study_id.clone()).or_default() += 1;
            inner.sessions.insert(s.session_id.clone(), s);
        }
        for r in replay.annotations {
            let s = inner
                .sessions
                .get_mut(&r.annotator_id)
                .ok_or_else(|| ServiceError::SessionNotFound(r.annotator_id.clone()))?;
            let items = s.items();
            if items.get(s.cursor()).map(|i| i.0) != Some(r.instance_id.as_str()) {
                return Err(ServiceError::Validation(format!(
                    "stored annotation for {:?} is out of order in session {:?}",
                    r.instance_id, r.annotator_id
                )));
            }
            s.answers.push(r.label);
            inner.annotations.push(r);
        }
        for sv in replay.surveys {
            if let Some(s) = inner.sessions.get_mut(&sv.session_id) {
                s.surveyed = true;
            }
            inner.surveys.push(sv);
        }
        Ok(StudyService {
            studies,
            cfg,
            inner: Mutex::new(inner),
        })
    }

    pub fn in_memory(studies: Vec<Study>, cfg: ServiceConfig) -> Result<Self> {
        StudyService::open(studies, cfg, None)
    }

    fn study(&self, id: &str) -> Result<&Study> {
        self.studies
            .get(id)
            .ok_or_else(|| ServiceError::StudyNotFound(id.to_string()))
    }

    /// New session with the opposite condition of the previous one in the
    /// same study.
    pub fn create_session(&self, study_id: &str) -> Result<SessionInfo> {
        let study = self.study(study_id)?;
        let ids: Vec<String> = study.instances.iter().map(|i| i.id().to_string()).collect();
        let mut inner = self.inner.lock().unwrap();
        let nth = inner.per_study.get(study_id).copied().unwrap_or(0);
        let condition = if nth % 2 == 0 {
            Condition::WithHighlights
        } else {
            Condition::WithoutHighlights
        };
        let index = inner.created;
        let session = StudySession::generate(
            format!("session-{index:05}"),
            study_id.to_string(),
            condition,
            &ids,
            self.cfg.attention_checks,
            self.cfg.seed,
            index as u64,
        );
        inner.store.append_session(&session)?;
        inner.created += 1;
        *inner.per_study.entry(study_id.to_string()).or_default() += 1;
        let info = session.info();
        inner.sessions.insert(session.session_id.clone(), session);
        Ok(info)
    }

    pub fn session(&self, session_id: &str) -> Result<SessionInfo> {
        let inner = self.inner.lock().unwrap();
        inner
            .sessions
            .get(session_id)
            .map(StudySession::info)
            .ok_or_else(|| ServiceError::SessionNotFound(session_id.to_string()))
    }

    /// Item at the session's progress cursor. Asking again before answering
    /// returns the same item.
    pub fn next_instance(&self, session_id: &str) -> Result<InstancePayload> {
        let mut inner = self.inner.lock().unwrap();
        let s = inner
            .sessions
            .get_mut(session_id)
            .ok_or_else(|| ServiceError::SessionNotFound(session_id.to_string()))?;
        if s.is_complete() {
            return Err(ServiceError::SessionComplete(session_id.to_string()));
        }
        let study = self.study(&s.study_id)?;
        let position = s.cursor();
        let instance_id = s.items()[position].0.to_string();
        let inst = &study.instances[study.position(&instance_id).expect("validated at creation")];
        s.served_at.get_or_insert_with(Instant::now);

        let (phrases, src_mask, tgt_mask) = match s.condition {
            Condition::WithoutHighlights => (None, None, None),
            Condition::WithHighlights => match study.highlights(&instance_id) {
                Some(h) => (
                    Some(h.phrases.clone()),
                    Some(h.src_mask.clone()),
                    Some(h.tgt_mask.clone()),
                ),
                None => (
                    Some(Vec::new()),
                    Some(vec![false; inst.pair.src.len()]),
                    Some(vec![false; inst.pair.tgt.len()]),
                ),
            },
        };
        Ok(InstancePayload {
            session_id: s.session_id.clone(),
            study_id: s.study_id.clone(),
            condition: s.condition,
            position,
            total: s.total(),
            instance_id,
            src_lang: inst.pair.src_lang.clone(),
            tgt_lang: inst.pair.tgt_lang.clone(),
            src: inst.pair.src.clone(),
            tgt: inst.pair.tgt.clone(),
            phrases,
            src_mask,
            tgt_mask,
        })
    }

    /// Records the answer to the item at the cursor. `annotator_id` names
    /// the session. The item must have been served first; a repeat of an
    /// answered item is a duplicate.
    pub fn submit_annotation(&self, mut record: AnnotationRecord) -> Result<Ack> {
        record
            .validate()
            .map_err(|e| ServiceError::Validation(e.to_string()))?;
        let mut guard = self.inner.lock().unwrap();
        let inner = &mut *guard;
        let s = inner
            .sessions
            .get_mut(&record.annotator_id)
            .ok_or_else(|| ServiceError::SessionNotFound(record.annotator_id.clone()))?;
        if record.study_id.as_ref().is_some_and(|id| *id != s.study_id) {
            return Err(ServiceError::Validation(format!(
                "session {:?} belongs to study {:?}",
                s.session_id, s.study_id
            )));
        }
        if record.condition != s.condition {
            return Err(ServiceError::Validation(format!(
                "session {:?} runs the {:?} condition",
                s.session_id, s.condition
            )));
        }
        let items = s.items();
        let cursor = s.cursor();
        let current = items.get(cursor).copied();
        let is_current =
            s.served_at.is_some() && current.is_some_and(|(id, _)| id == record.instance_id);
        if !is_current {
            if items[..cursor]
                .iter()
                .any(|(id, _)| *id == record.instance_id)
            {
                return Err(ServiceError::DuplicateSubmission(format!(
                    "instance {:?} already answered in session {:?}",
                    record.instance_id, s.session_id
                )));
            }
            if current.is_none() {
                return Err(ServiceError::SessionComplete(s.session_id.clone()));
            }
            return Err(ServiceError::Validation(format!(
                "instance {:?} is not the item served at position {cursor}",
                record.instance_id
            )));
        }
        let is_check = current.expect("checked above").1;
        record.study_id = Some(s.study_id.clone());
        record.attention_check = is_check.then(|| s.answers.last() == Some(&record.label));
        record.server_elapsed_ms = s.served_at.map(|t| t.elapsed().as_millis() as u64);

        inner.store.append_annotation(&record)?;
        s.answers.push(record.label);
        s.served_at = None;
        let ack = Ack {
            session_id: s.session_id.clone(),
            position: s.cursor(),
            complete: s.is_complete(),
        };
        inner.annotations.push(record);
        Ok(ack)
    }

    /// Stores the closing survey of a completed session, once.
    pub fn submit_survey(&self, mut survey: SurveyResponse) -> Result<Ack> {
        for (name, v) in [
            ("usefulness", Some(survey.usefulness)),
            ("adoption", survey.adoption),
        ] {
            if let Some(v) = v {
                if !(1..=5).contains(&v) {
                    return Err(ServiceError::Validation(format!(
                        "{name} must be in 1..=5, got {v}"
                    )));
                }
            }
        }
        let mut guard = self.inner.lock().unwrap();
        let inner = &mut *guard;
        let s = inner
            .sessions
            .get_mut(&survey.session_id)
            .ok_or_else(|| ServiceError::SessionNotFound(survey.session_id.clone()))?;
        if s.surveyed {
            return Err(ServiceError::DuplicateSubmission(format!(
                "survey for session {:?} already recorded",
                s.session_id
            )));
        }
        if !s.is_complete() {
            return Err(ServiceError::Validation(format!(
                "session {:?} has unanswered items",
                s.session_id
            )));
        }
        survey.study_id = Some(s.study_id.clone());
        inner.store.append_survey(&survey)?;
        s.surveyed = true;
        let ack = Ack {
            session_id: s.session_id.clone(),
            position: s.cursor(),
            complete: true,
        };
        inner.surveys.push(survey);
        Ok(ack)
    }

    /// Annotation records of a study in submission order.
    pub fn export_annotations(&self, study_id: &str) -> Result<Vec<AnnotationRecord>> {
        self.study(study_id)?;
        let inner = self.inner.lock().unwrap();
        Ok(inner
            .annotations
            .iter()
            .filter(|r| r.study_id.as_deref() == Some(study_id))
            .cloned()
            .collect())
    }

    pub fn export_surveys(&self, study_id: &str) -> Result<Vec<SurveyResponse>> {
        self.study(study_id)?;
        let inner = self.inner.lock().unwrap();
        Ok(inner
            .surveys
            .iter()
            .filter(|s| s.study_id.as_deref() == Some(study_id))
            .cloned()
            .collect())
    }

    pub fn health(&self) -> Health {
        let inner = self.inner.lock().unwrap();
        Health {
            status: "ok".into(),
            studies: self.studies.len(),
            sessions: inner.sessions.len(),
            annotations: inner.annotations.len(),
        }
    }
}
