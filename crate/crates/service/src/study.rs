use std::collections::HashMap;
use std::path::Path;

use phrasal::io::{load_corpus, read_highlights, CorpusInstance};
use phrasal::HighlightSet;

use crate::error::{Result, ServiceError};

/// Instances shown in one study, with the highlights displayed to the
/// with-highlights condition.
#[derive(Clone, Debug)]
pub struct Study {
    pub id: String,
    pub instances: Vec<CorpusInstance>,
    highlights: HashMap<String, HighlightSet>,
    index: HashMap<String, usize>,
}

impl Study {
    pub fn new(
        id: impl Into<String>,
        instances: Vec<CorpusInstance>,
        highlights: Vec<HighlightSet>,
    ) -> Result<Self> {
        let id = id.into();
        let index: HashMap<String, usize> = instances
            .iter()
            .enumerate()
            .map(|(k, inst)| (inst.id().to_string(), k))
            .collect();
        if index.len() != instances.len() {
            return Err(ServiceError::Validation(format!(
                "study {id:?} has duplicate instance ids"
            )));
        }
        let mut by_id = HashMap::new();
        for h in highlights {
            let Some(&k) = index.get(&h.id) else {
                return Err(ServiceError::Validation(format!(
                    "highlights for {:?} match no instance of study {id:?}",
                    h.id
                )));
            };
            let pair = &instances[k].pair;
            if h.src_mask.len() != pair.src.len() || h.tgt_mask.len() != pair.tgt.len() {
                return Err(ServiceError::Validation(format!(
                    "highlights for {:?} do not match the instance token counts",
                    h.id
                )));
            }
            by_id.insert(h.id.clone(), h);
        }
        Ok(Study {
            id,
            instances,
            highlights: by_id,
            index,
        })
    }

    /// Loads a corpus file and, optionally, a highlights file for it.
    pub fn load(id: impl Into<String>, corpus: &Path, highlights: Option<&Path>) -> Result<Self> {
        let instances = load_corpus(corpus)?;
        let hs = match highlights {
            Some(p) => read_highlights(p)?,
            None => Vec::new(),
        };
        Study::new(id, instances, hs)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn position(&self, instance_id: &str) -> Option<usize> {
        self.index.get(instance_id).copied()
    }

    pub fn highlights(&self, instance_id: &str) -> Option<&HighlightSet> {
        self.highlights.get(instance_id)
    }
}
