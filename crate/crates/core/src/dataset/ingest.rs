//! CSV ingestion of externally published test suites.
//!
//! Column names and value vocabularies differ between releases, so the
//! mapping lives in a versioned [`AdapterConfig`] rather than in code.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Source, StoreError, TestCase};
use crate::registry::{FunctionalityId, Label, Registry};

pub const ADAPTER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    /// Falls back to `<source>-<row>` when absent.
    pub id: Option<String>,
    pub text: String,
    pub functionality: String,
    /// Falls back to the registry label when absent.
    pub label: Option<String>,
    /// Absent means every row targets no protected group.
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    pub version: u32,
    pub source: Source,
    pub columns: ColumnMap,
    /// Raw functionality value to registry id. Values already of the form
    /// `F<n>` are accepted without an entry.
    pub functionality_map: BTreeMap<String, FunctionalityId>,
    /// Rows whose functionality starts with one of these are dropped.
    #[serde(default)]
    pub skip_functionality_prefixes: Vec<String>,
    pub label_map: BTreeMap<String, u8>,
    /// Raw target value to group name; `null` means no protected group.
    pub target_map: BTreeMap<String, Option<String>>,
}

impl AdapterConfig {
    pub fn hatecheck() -> Self {
        serde_json::from_str(include_str!("../../data/adapters/hatecheck.json"))
            .expect("bundled adapter is valid")
    }

    pub fn gpt_hatecheck() -> Self {
        serde_json::from_str(include_str!("../../data/adapters/gpt_hatecheck.json"))
            .expect("bundled adapter is valid")
    }

    pub fn for_source(source: Source) -> Option<Self> {
        match source {
            Source::IngestedHatecheck => Some(Self::hatecheck()),
            Source::IngestedGptHatecheck => Some(Self::gpt_hatecheck()),
            Source::Generated => None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| StoreError::Adapter(format!("{}: {e}", path.display())))?;
        if cfg.version != ADAPTER_VERSION {
            return Err(StoreError::Adapter(format!(
                "{}: unsupported adapter version {} (expected {ADAPTER_VERSION})",
                path.display(),
                cfg.version
            )));
        }
        Ok(cfg)
    }

    fn functionality(&self, raw: &str) -> Option<FunctionalityId> {
        self.functionality_map
            .get(raw)
            .copied()
            .or_else(|| raw.parse().ok())
    }

    fn skips(&self, raw: &str) -> bool {
        self.skip_functionality_prefixes
            .iter()
            .any(|p| raw.starts_with(p.as_str()))
    }
}

/// Directory holding the published `hatecheck.csv` and
/// `gpt_hatecheck.csv`, when available.
pub const PUBLIC_DATA_ENV: &str = "HATECHECK_FORGE_PUBLIC_DATA";

/// Small excerpts of each published suite, bundled for adapter tests.
pub fn bundled_excerpt(source: Source) -> Option<&'static str> {
    match source {
        Source::IngestedHatecheck => Some(include_str!("../../data/excerpts/hatecheck_excerpt.csv")),
        Source::IngestedGptHatecheck => {
            Some(include_str!("../../data/excerpts/gpt_hatecheck_excerpt.csv"))
        }
        Source::Generated => None,
    }
}

/// File name of each published suite inside [`PUBLIC_DATA_ENV`].
pub fn public_file_name(source: Source) -> Option<&'static str> {
    match source {
        Source::IngestedHatecheck => Some("hatecheck.csv"),
        Source::IngestedGptHatecheck => Some("gpt_hatecheck.csv"),
        Source::Generated => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub cases: Vec<TestCase>,
    pub skipped: usize,
}

/// Reads a CSV file into kept [`TestCase`]s, checking every label and group
/// against the registry.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    adapter: &AdapterConfig,
    registry: &Registry,
) -> Result<IngestReport, StoreError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(file, &path.display().to_string(), adapter, registry)
}

pub fn ingest_reader<R: std::io::Read>(
    reader: R,
    name: &str,
    adapter: &AdapterConfig,
    registry: &Registry,
) -> Result<IngestReport, StoreError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let malformed = |line: usize, message: String| StoreError::Malformed {
        path: name.to_string(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let column = |col: &str| {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| StoreError::Adapter(format!("{name}: missing column {col:?}")))
    };
    let c = &adapter.columns;
    let text_ix = column(&c.text)?;
    let func_ix = column(&c.functionality)?;
    let id_ix = c.id.as_deref().map(column).transpose()?;
    let label_ix = c.label.as_deref().map(column).transpose()?;
    let target_ix = c.target.as_deref().map(column).transpose()?;

    let mut cases = Vec::new();
    let mut skipped = 0;
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        let field = |ix: usize| record.get(ix).unwrap_or("");
        let raw_func = field(func_ix).trim();
        if adapter.skips(raw_func) {
            skipped += 1;
            continue;
        }
        let fid = adapter
            .functionality(raw_func)
            .ok_or_else(|| malformed(line, format!("unmapped functionality {raw_func:?}")))?;
        let f = registry.functionality(fid).ok_or_else(|| StoreError::UnknownFunctionality {
            id: format!("line {line}"),
            functionality: fid,
        })?;
        let id = match id_ix {
            Some(ix) => field(ix).trim().to_string(),
            None => format!("{}-{:05}", adapter.source.as_str(), row + 1),
        };
        let gold_label = match label_ix {
            Some(ix) => {
                let raw = field(ix).trim();
                let value = adapter
                    .label_map
                    .get(raw)
                    .copied()
                    .ok_or_else(|| malformed(line, format!("unmapped label {raw:?}")))?;
                Label::from_u8(value)
                    .ok_or_else(|| StoreError::Adapter(format!("label map yields {value}")))?
            }
            None => f.gold_label,
        };
        if gold_label != f.gold_label {
            return Err(StoreError::LabelMismatch {
                id,
                functionality: fid,
                expected: f.gold_label.as_u8(),
                found: gold_label.as_u8(),
            });
        }
        let target_group = match target_ix {
            Some(ix) => {
                let raw = field(ix).trim();
                let group = adapter
                    .target_map
                    .get(raw)
                    .cloned()
                    .ok_or_else(|| malformed(line, format!("unmapped target {raw:?}")))?;
                if let Some(g) = &group {
                    if registry.group(g).is_none() {
                        return Err(malformed(line, format!("target maps to unknown group {g:?}")));
                    }
                }
                group
            }
            None => None,
        };
        cases.push(TestCase {
            id,
            functionality_id: fid,
            target_group,
            text: field(text_ix).to_string(),
            gold_label,
            kept: true,
            test_results: Vec::new(),
            source: adapter.source,
        });
    }
    Ok(IngestReport { cases, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(csv: &str, adapter: &AdapterConfig) -> Result<IngestReport, StoreError> {
        ingest_reader(csv.as_bytes(), "mem.csv", adapter, &Registry::bundled())
    }

    #[test]
    fn bundled_adapters_cover_all_functionalities() {
        for a in [AdapterConfig::hatecheck(), AdapterConfig::gpt_hatecheck()] {
            assert_eq!(a.version, ADAPTER_VERSION);
            for id in FunctionalityId::all() {
                assert!(a.functionality_map.values().any(|v| *v == id), "{id}");
            }
        }
    }

    #[test]
    fn hatecheck_rows() {
        let csv = "case_id,functionality,test_case,label_gold,target_ident\n\
                   1,derog_neg_emote_h,I hate women.,hateful,women\n\
                   2,spell_leet_h,I h4te women.,hateful,women\n\
                   3,target_obj_nh,I hate this chair.,non-hateful,\n\
                   4,ident_neutral_nh,\"We are Muslims, and proud.\",non-hateful,Muslims\n";
        let r = run(csv, &AdapterConfig::hatecheck()).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.cases.len(), 3);
        assert_eq!(r.cases[0].functionality_id.to_string(), "F1");
        assert_eq!(r.cases[0].target_group.as_deref(), Some("women"));
        assert_eq!(r.cases[1].target_group, None);
        assert_eq!(r.cases[2].text, "We are Muslims, and proud.");
        assert_eq!(r.cases[2].target_group.as_deref(), Some("muslims"));
        assert!(r.cases.iter().all(|c| c.kept && c.source == Source::IngestedHatecheck));
    }

    #[test]
    fn label_mismatch_is_rejected() {
        let csv = "case_id,functionality,test_case,label_gold,target_ident\n\
                   9,ident_pos_nh,x,hateful,women\n";
        assert!(matches!(
            run(csv, &AdapterConfig::hatecheck()),
            Err(StoreError::LabelMismatch { expected: 0, found: 1, .. })
        ));
    }

    #[test]
    fn unmapped_values_report_line() {
        let csv = "case_id,functionality,test_case,label_gold,target_ident\n\
                   1,derog_neg_emote_h,x,hateful,women\n\
                   2,mystery,x,hateful,women\n";
        match run(csv, &AdapterConfig::hatecheck()) {
            Err(StoreError::Malformed { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("mystery"));
            }
            other => panic!("{other:?}"),
        }
        let csv = "case_id,functionality,test_case,label_gold,target_ident\n\
                   1,derog_neg_emote_h,x,hateful,martians\n";
        assert!(matches!(run(csv, &AdapterConfig::hatecheck()), Err(StoreError::Malformed { line: 2, .. })));
    }

    #[test]
    fn missing_column() {
        let csv = "functionality,text\nF1,x\n";
        assert!(matches!(run(csv, &AdapterConfig::hatecheck()), Err(StoreError::Adapter(_))));
    }

    #[test]
    fn gpt_adapter_accepts_ids_and_group_names() {
        let csv = "functionality,text,label,target\n\
                   F7,x,1,black\n\
                   slur_homonym_nh,y,non-hateful,black people\n\
                   F22,z,0,none\n";
        let r = run(csv, &AdapterConfig::gpt_hatecheck()).unwrap();
        assert_eq!(r.cases.len(), 3);
        assert_eq!(r.cases[0].id, "ingested-gpt-hatecheck-00001");
        assert_eq!(r.cases[1].functionality_id.to_string(), "F8");
        assert_eq!(r.cases[1].target_group.as_deref(), Some("black"));
        assert_eq!(r.cases[2].target_group, None);
    }

    fn group_counts(cases: &[TestCase]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for c in cases {
            *m.entry(c.group_label().to_string()).or_default() += 1;
        }
        m
    }

    fn expect(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(g, n)| (g.to_string(), *n)).collect()
    }

    #[test]
    fn hatecheck_excerpt_counts() {
        let text = bundled_excerpt(Source::IngestedHatecheck).unwrap();
        let r = run(text, &AdapterConfig::hatecheck()).unwrap();
        assert_eq!((r.cases.len(), r.skipped), (44, 6));
        assert_eq!(
            group_counts(&r.cases),
            expect(&[
                ("women", 6), ("trans", 6), ("gay", 5), ("black", 5),
                ("disabled", 6), ("muslims", 6), ("immigrants", 5), ("none", 5),
            ])
        );
    }

    #[test]
    fn gpt_hatecheck_excerpt_counts() {
        let text = bundled_excerpt(Source::IngestedGptHatecheck).unwrap();
        let r = run(text, &AdapterConfig::gpt_hatecheck()).unwrap();
        assert_eq!((r.cases.len(), r.skipped), (50, 0));
        assert_eq!(
            group_counts(&r.cases),
            expect(&[
                ("women", 7), ("trans", 4), ("gay", 6), ("black", 6),
                ("disabled", 7), ("muslims", 7), ("immigrants", 5), ("none", 8),
            ])
        );
    }

    #[test]
    fn adapter_file_version_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let mut cfg = serde_json::to_value(AdapterConfig::hatecheck()).unwrap();
        std::fs::write(&path, cfg.to_string()).unwrap();
        assert_eq!(AdapterConfig::load(&path).unwrap(), AdapterConfig::hatecheck());
        cfg["version"] = 2.into();
        std::fs::write(&path, cfg.to_string()).unwrap();
        assert!(matches!(AdapterConfig::load(&path), Err(StoreError::Adapter(_))));
    }
}
