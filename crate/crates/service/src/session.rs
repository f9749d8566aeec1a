use std::time::Instant;

use phrasal::eval::{Condition, Label};
use phrasal::types::Highlight;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One participant's pass through a study. Serialised form is the durable
/// session record; progress is rebuilt from the annotation log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySession {
    pub session_id: String,
    pub study_id: String,
    pub condition: Condition,
    /// Instance ids in presentation order.
    pub order: Vec<String>,
    /// Item positions that repeat the preceding item as an attention check.
    pub check_positions: Vec<usize>,
    #[serde(skip)]
    pub(crate) answers: Vec<Label>,
    #[serde(skip)]
    pub(crate) served_at: Option<Instant>,
    #[serde(skip)]
    pub(crate) surveyed: bool,
}

impl StudySession {
    /// Builds session number `index` of a study. The permutation and the
    /// check positions come from stream `stream` of the server seed.
    pub fn generate(
        session_id: String,
        study_id: String,
        condition: Condition,
        instance_ids: &[String],
        checks: usize,
        seed: u64,
        stream: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut order = instance_ids.to_vec();
        order.shuffle(&mut rng);
        let n = order.len();
        let mut after = sample(&mut rng, n, checks.min(n)).into_vec();
        after.sort_unstable();
        // a check after real item r lands at r + 1 + (checks placed before it)
        let check_positions = after.iter().enumerate().map(|(k, r)| r + 1 + k).collect();
        StudySession {
            session_id,
            study_id,
            condition,
            order,
            check_positions,
            answers: Vec::new(),
            served_at: None,
            surveyed: false,
        }
    }

    /// `(instance id, is attention check)` for every position.
    pub fn items(&self) -> Vec<(&str, bool)> {
        let mut items = Vec::with_capacity(self.total());
        let mut checks = self.check_positions.iter().peekable();
        for id in &self.order {
            items.push((id.as_str(), false));
            if checks.peek() == Some(&&items.len()) {
                checks.next();
                items.push((id.as_str(), true));
            }
        }
        items
    }

    pub fn total(&self) -> usize {
        self.order.len() + self.check_positions.len()
    }

    pub fn cursor(&self) -> usize {
        self.answers.len()
    }

    pub fn is_complete(&self) -> bool {
        self.cursor() >= self.total()
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            session_id: self.session_id.clone(),
            study_id: self.study_id.clone(),
            condition: self.condition,
            position: self.cursor(),
            total: self.total(),
            complete: self.is_complete(),
        }
    }
}

/// What clients learn about their session. Check positions stay private.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub study_id: String,
    pub condition: Condition,
    pub position: usize,
    pub total: usize,
    pub complete: bool,
}

/// One item as shown to the annotator. The highlight fields exist only in
/// the with-highlights condition; check items look like any other item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstancePayload {
    pub session_id: String,
    pub study_id: String,
    pub condition: Condition,
    pub position: usize,
    pub total: usize,
    pub instance_id: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrases: Option<Vec<Highlight>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_mask: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt_mask: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub session_id: String,
    /// Filled in by the server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_id: Option<String>,
    /// "The highlights are useful in detecting meaning differences", 1 to 5.
    pub usefulness: u8,
    /// "I would like to use the highlights", 1 to 5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adoption: Option<u8>,
    #[serde(default)]
    pub feedback: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demographics: Option<std::collections::BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub session_id: String,
    /// Position of the next item.
    pub position: usize,
    pub complete: bool,
}
