//! Human annotation records and the measures computed over them.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::prf::{Counts, Prf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    WithHighlights,
    WithoutHighlights,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Equivalent,
    Divergent,
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equivalent" | "eq" => Ok(Label::Equivalent),
            "divergent" | "div" => Ok(Label::Divergent),
            _ => Err(Error::Parse(format!("unknown label {s:?}"))),
        }
    }
}

/// Fine-grained label on a divergent answer: kind of difference for the
/// divergence study, error severity for the critical-error study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sublabel {
    Added,
    Changed,
    Minor,
    Major,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_id: Option<String>,
    pub instance_id: String,
    pub annotator_id: String,
    pub condition: Condition,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sublabel: Option<Sublabel>,
    pub elapsed_ms: u64,
    /// Set on attention-check items: whether the answer repeated the
    /// previous one. Such records are ignored by the accuracy measures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_check: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_elapsed_ms: Option<u64>,
}

impl AnnotationRecord {
    pub fn new(
        instance_id: impl Into<String>,
        annotator_id: impl Into<String>,
        condition: Condition,
        label: Label,
        sublabel: Option<Sublabel>,
    ) -> Self {
        AnnotationRecord {
            study_id: None,
            instance_id: instance_id.into(),
            annotator_id: annotator_id.into(),
            condition,
            label,
            sublabel,
            elapsed_ms: 0,
            attention_check: None,
            server_elapsed_ms: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sublabel.is_some() && self.label != Label::Divergent {
            return Err(Error::Parse(format!(
                "record for {:?}: sublabel only allowed on divergent answers",
                self.instance_id
            )));
        }
        Ok(())
    }

    pub fn is_attention_check(&self) -> bool {
        self.attention_check.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub label: Label,
    /// The top count was shared; ties go to divergent.
    pub tie: bool,
}

pub fn majority_vote(labels: &[Label]) -> Option<Vote> {
    if labels.is_empty() {
        return None;
    }
    let div = labels.iter().filter(|&&l| l == Label::Divergent).count();
    let eq = labels.len() - div;
    Some(Vote {
        label: if div >= eq {
            Label::Divergent
        } else {
            Label::Equivalent
        },
        tie: div == eq,
    })
}

/// Majority vote per instance over the non-check records.
pub fn majority_by_instance(records: &[AnnotationRecord]) -> BTreeMap<String, Vote> {
    let mut by: BTreeMap<String, Vec<Label>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_attention_check()) {
        by.entry(r.instance_id.clone()).or_default().push(r.label);
    }
    by.into_iter()
        .filter_map(|(id, ls)| majority_vote(&ls).map(|v| (id, v)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Every record counts.
    Group,
    /// One majority-voted label per instance.
    Majority,
}

/// `(predicted, gold)` label pairs for every non-check record.
pub fn judged(
    records: &[AnnotationRecord],
    gold: &HashMap<String, Label>,
) -> Result<Vec<(Label, Label)>> {
    records
        .iter()
        .filter(|r| !r.is_attention_check())
        .map(|r| {
            gold.get(&r.instance_id)
                .map(|&g| (r.label, g))
                .ok_or_else(|| Error::MissingGold(r.instance_id.clone()))
        })
        .collect()
}

pub fn label_counts(pairs: &[(Label, Label)]) -> Counts {
    let mut c = Counts::default();
    for &(p, g) in pairs {
        c.observe(p == Label::Divergent, g == Label::Divergent);
    }
    c
}

/// Precision/recall/F1 with divergent as the positive class.
pub fn annotation_accuracy(
    records: &[AnnotationRecord],
    gold: &HashMap<String, Label>,
    scope: Scope,
) -> Result<Prf> {
    let pairs = match scope {
        Scope::Group => judged(records, gold)?,
        Scope::Majority => majority_by_instance(records)
            .into_iter()
            .map(|(id, v)| {
                gold.get(&id)
                    .map(|&g| (v.label, g))
                    .ok_or(Error::MissingGold(id))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(label_counts(&pairs).prf())
}

/// Scalar measures over judged labels, used for significance tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMetric {
    Precision,
    Recall,
    F1,
    Accuracy,
}

impl LabelMetric {
    pub fn compute(self, pairs: &[(Label, Label)]) -> f64 {
        match self {
            LabelMetric::Accuracy => {
                if pairs.is_empty() {
                    0.0
                } else {
                    pairs.iter().filter(|(p, g)| p == g).count() as f64 / pairs.len() as f64
                }
            }
            _ => {
                let prf = label_counts(pairs).prf();
                match self {
                    LabelMetric::Precision => prf.precision,
                    LabelMetric::Recall => prf.recall,
                    _ => prf.f1,
                }
            }
        }
    }
}

impl std::str::FromStr for LabelMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precision" => Ok(LabelMetric::Precision),
            "recall" => Ok(LabelMetric::Recall),
            "f1" => Ok(LabelMetric::F1),
            "accuracy" => Ok(LabelMetric::Accuracy),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

/// Cohen's kappa per pair of annotators on their shared instances,
/// averaged. Annotators sharing no instance are skipped.
pub fn annotator_agreement(records: &[AnnotationRecord]) -> Result<crate::eval::Kappa> {
    let mut by: BTreeMap<&str, HashMap<&str, Label>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_attention_check()) {
        by.entry(&r.annotator_id)
            .or_default()
            .insert(&r.instance_id, r.label);
    }
    let annotators: Vec<_> = by.values().collect();
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut degenerate = false;
    for i in 0..annotators.len() {
        for j in i + 1..annotators.len() {
            let mut shared: Vec<&&str> = annotators[i]
                .keys()
                .filter(|k| annotators[j].contains_key(**k))
                .collect();
            if shared.is_empty() {
                continue;
            }
            shared.sort();
            let a: Vec<Label> = shared.iter().map(|k| annotators[i][**k]).collect();
            let b: Vec<Label> = shared.iter().map(|k| annotators[j][**k]).collect();
            let k = crate::eval::cohen_kappa(&a, &b)?;
            sum += k.value;
            degenerate |= k.degenerate;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyGroup);
    }
    Ok(crate::eval::Kappa {
        value: sum / n as f64,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Divergent as D, Equivalent as E};

    fn rec(inst: &str, who: &str, label: Label) -> AnnotationRecord {
        AnnotationRecord::new(inst, who, Condition::WithHighlights, label, None)
    }

    #[test]
    fn votes() {
        assert_eq!(
            majority_vote(&[D, D, E]),
            Some(Vote {
                label: D,
                tie: false
            })
        );
        assert_eq!(
            majority_vote(&[E, E, E]),
            Some(Vote {
                label: E,
                tie: false
            })
        );
        assert_eq!(
            majority_vote(&[D, E]),
            Some(Vote {
                label: D,
                tie: true
            })
        );
        assert_eq!(majority_vote(&[]), None);
    }

    #[test]
    fn sublabel_rule() {
        let mut r = AnnotationRecord::new(
            "i",
            "a",
            Condition::WithHighlights,
            D,
            Some(Sublabel::Added),
        );
        assert!(r.validate().is_ok());
        r.label = E;
        assert!(r.validate().is_err());
    }

    #[test]
    fn all_correct() {
        let gold = HashMap::from([("1".to_string(), D), ("2".to_string(), E)]);
        let recs = vec![rec("1", "a", D), rec("2", "a", E)];
        for scope in [Scope::Group, Scope::Majority] {
            assert_eq!(
                annotation_accuracy(&recs, &gold, scope).unwrap(),
                Prf::new(1.0, 1.0)
            );
        }
    }

    #[test]
    fn half_missed() {
        let gold: HashMap<String, Label> = (0..4).map(|i| (i.to_string(), D)).collect();
        let recs = vec![
            rec("0", "a", D),
            rec("1", "a", D),
            rec("2", "a", E),
            rec("3", "a", E),
        ];
        let p = annotation_accuracy(&recs, &gold, Scope::Group).unwrap();
        assert_eq!((p.precision, p.recall), (1.0, 0.5));
    }

    #[test]
    fn majority_repairs_minority_errors() {
        let gold: HashMap<String, Label> = [("0", D), ("1", E), ("2", D)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let mut recs = Vec::new();
        for (k, (id, g)) in [("0", D), ("1", E), ("2", D)].into_iter().enumerate() {
            let wrong = if g == D { E } else { D };
            for (w, who) in ["a", "b", "c"].into_iter().enumerate() {
                recs.push(rec(id, who, if w == k { wrong } else { g }));
            }
        }
        assert_eq!(
            annotation_accuracy(&recs, &gold, Scope::Majority).unwrap(),
            Prf::new(1.0, 1.0)
        );
        assert!(annotation_accuracy(&recs, &gold, Scope::Group).unwrap().f1 < 1.0);
    }

    #[test]
    fn checks_are_ignored_and_gold_required() {
        let gold = HashMap::from([("1".to_string(), D)]);
        let mut check = rec("1", "a", E);
        check.attention_check = Some(false);
        let recs = vec![rec("1", "a", D), check];
        assert_eq!(
            annotation_accuracy(&recs, &gold, Scope::Group).unwrap(),
            Prf::new(1.0, 1.0)
        );
        let recs = vec![rec("9", "a", D)];
        assert!(matches!(
            annotation_accuracy(&recs, &gold, Scope::Group),
            Err(Error::MissingGold(id)) if id == "9"
        ));
    }

    #[test]
    fn metric_values() {
        let pairs = [(D, D), (D, E), (E, D), (E, E)];
        assert_eq!(LabelMetric::Accuracy.compute(&pairs), 0.5);
        assert_eq!(LabelMetric::Precision.compute(&pairs), 0.5);
        assert_eq!(LabelMetric::Recall.compute(&pairs), 0.5);
    }

    #[test]
    fn agreement_across_annotators() {
        let recs = vec![
            rec("1", "a", D),
            rec("2", "a", E),
            rec("1", "b", D),
            rec("2", "b", E),
            rec("3", "c", D),
        ];
        let k = annotator_agreement(&recs).unwrap();
        assert_eq!(k.value, 1.0);
    }

    #[test]
    fn record_json_shape() {
        let r = AnnotationRecord::new(
            "i",
            "s",
            Condition::WithoutHighlights,
            D,
            Some(Sublabel::Major),
        );
        let j = serde_json::to_string(&r).unwrap();
        assert_eq!(
            j,
            r#"{"instance_id":"i","annotator_id":"s","condition":"without_highlights","label":"divergent","sublabel":"major","elapsed_ms":0}"#
        );
    }
}
