//! Leave-one-subject-out folds.

use serde::{Deserialize, Serialize};

use super::layout::{DatasetIndex, SequenceEntry};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LosoFold {
    pub test_subject: u32,
    pub train_subjects: Vec<u32>,
}

impl LosoFold {
    /// Split entries into (train, test) for this fold.
    pub fn partition<'a>(&self, entries: &'a [SequenceEntry]) -> (Vec<&'a SequenceEntry>, Vec<&'a SequenceEntry>) {
        entries.iter().partition(|e| e.key.subject != self.test_subject)
    }
}

/// One fold per subject, in ascending subject order.
pub fn split_loso(index: &DatasetIndex) -> Result<Vec<LosoFold>> {
    if index.subjects.len() < 2 {
        return Err(Error::Dataset(format!(
            "leave-one-subject-out needs at least 2 subjects, index has {}",
            index.subjects.len()
        )));
    }
    let mut subjects = index.subjects.clone();
    subjects.sort_unstable();
    subjects.dedup();
    Ok(subjects
        .iter()
        .map(|&test| LosoFold {
            test_subject: test,
            train_subjects: subjects.iter().copied().filter(|&s| s != test).collect(),
        })
        .collect())
}
