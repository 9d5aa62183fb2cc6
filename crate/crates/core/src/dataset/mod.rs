//! Persistence of candidates and test cases, dataset statistics, and
//! ingestion of externally published datasets.

mod ingest;
mod jsonl;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{Candidate, CellKey};
use crate::registry::{Functionality, FunctionalityId, Label, Registry};
use crate::validation::{TestResult, Verdict};

pub use ingest::{
    bundled_excerpt, ingest_csv, ingest_reader, public_file_name, AdapterConfig, ColumnMap,
    IngestReport, ADAPTER_VERSION, PUBLIC_DATA_ENV,
};
pub use jsonl::{append_jsonl, read_jsonl, to_jsonl_string, write_jsonl};
pub use stats::{compute_stats, CellStats, DatasetStats, GroupCounts, UNDEFINED};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("case {id}: gold label {found} disagrees with {functionality} ({expected})")]
    LabelMismatch {
        id: String,
        functionality: FunctionalityId,
        expected: u8,
        found: u8,
    },
    #[error("case {id}: unknown functionality {functionality}")]
    UnknownFunctionality {
        id: String,
        functionality: FunctionalityId,
    },
    #[error("ingestion error: {0}")]
    Adapter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Generated,
    IngestedHatecheck,
    IngestedGptHatecheck,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Generated => "generated",
            Source::IngestedHatecheck => "ingested-hatecheck",
            Source::IngestedGptHatecheck => "ingested-gpt-hatecheck",
        }
    }
}

/// A validated (or ingested) message. Cases with `kept = true` form the
/// released dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub functionality_id: FunctionalityId,
    pub target_group: Option<String>,
    pub text: String,
    pub gold_label: Label,
    pub kept: bool,
    pub test_results: Vec<TestResult>,
    pub source: Source,
}

impl TestCase {
    pub fn from_verdict(candidate: &Candidate, f: &Functionality, verdict: Verdict) -> Self {
        Self {
            id: candidate.id.clone(),
            functionality_id: candidate.functionality_id,
            target_group: candidate.target_group.clone(),
            text: candidate.text.clone(),
            gold_label: f.gold_label,
            kept: verdict.kept,
            test_results: verdict.results,
            source: Source::Generated,
        }
    }

    pub fn cell(&self) -> CellKey {
        CellKey::new(self.functionality_id, self.target_group.as_deref())
    }

    pub fn group_label(&self) -> &str {
        self.target_group.as_deref().unwrap_or("none")
    }
}

/// Checks every case's gold label against the registry.
pub fn check_labels(cases: &[TestCase], registry: &Registry) -> Result<(), StoreError> {
    for case in cases {
        let f = registry.functionality(case.functionality_id).ok_or_else(|| {
            StoreError::UnknownFunctionality {
                id: case.id.clone(),
                functionality: case.functionality_id,
            }
        })?;
        if f.gold_label != case.gold_label {
            return Err(StoreError::LabelMismatch {
                id: case.id.clone(),
                functionality: f.id,
                expected: f.gold_label.as_u8(),
                found: case.gold_label.as_u8(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(fid: &str, label: Label) -> TestCase {
        TestCase {
            id: "c1".into(),
            functionality_id: fid.parse().unwrap(),
            target_group: Some("women".into()),
            text: "t".into(),
            gold_label: label,
            kept: true,
            test_results: vec![],
            source: Source::Generated,
        }
    }

    #[test]
    fn label_check() {
        let reg = Registry::bundled();
        assert!(check_labels(&[case("F1", Label::Hateful)], &reg).is_ok());
        assert!(matches!(
            check_labels(&[case("F18", Label::Hateful)], &reg),
            Err(StoreError::LabelMismatch { expected: 0, found: 1, .. })
        ));
    }

    #[test]
    fn source_serialization() {
        assert_eq!(
            serde_json::to_string(&Source::IngestedGptHatecheck).unwrap(),
            "\"ingested-gpt-hatecheck\""
        );
        assert_eq!(Source::Generated.as_str(), "generated");
    }
}
