use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::StoreError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One compact JSON document per line, each line terminated by `\n`.
pub fn to_jsonl_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Writes (replacing) a JSON-lines file.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), StoreError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    fs::write(path, to_jsonl_string(records)).map_err(io_err(path))
}

/// Appends records to a JSON-lines file, creating it if needed.
pub fn append_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), StoreError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut writer, r).expect("record serializes");
        writer.write_all(b"\n").map_err(io_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

/// Reads a JSON-lines file; blank lines are skipped. A missing file reads as
/// empty so that resumable commands can start from scratch.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, StoreError> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Source, TestCase};
    use crate::registry::Label;
    use crate::validation::{HypothesisTest, Outcome, TestResult, NLI_HATE};
    use crate::EntailmentScore;

    fn synthetic(i: usize) -> TestCase {
        let p = (i as f64 * 0.37).sin().abs();
        TestCase {
            id: format!("F{}-x-{i:03}", i % 24 + 1),
            functionality_id: format!("F{}", i % 24 + 1).parse().unwrap(),
            target_group: (!i.is_multiple_of(3)).then(|| "women".to_string()),
            text: format!("message \"{i}\" with unicode \u{2019} and\ttab"),
            gold_label: if i.is_multiple_of(2) { Label::Hateful } else { Label::NonHateful },
            kept: !i.is_multiple_of(5),
            test_results: vec![TestResult {
                test: HypothesisTest::nli(NLI_HATE),
                transformed_text: Some("t".into()),
                outcome: Outcome::Nli {
                    p_entail: p,
                    evaluations: vec![crate::validation::HypothesisScore {
                        hypothesis: NLI_HATE.into(),
                        score: EntailmentScore {
                            p_entail: p,
                            raw_logits: [p, -1.0 / 3.0, 1e-300],
                        },
                    }],
                },
                passed: true,
            }],
            source: Source::Generated,
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        let cases: Vec<TestCase> = (0..100).map(synthetic).collect();
        write_jsonl(&path, &cases).unwrap();
        let first = fs::read_to_string(&path).unwrap();
        let loaded: Vec<TestCase> = read_jsonl(&path).unwrap();
        assert_eq!(loaded, cases);
        assert_eq!(to_jsonl_string(&loaded), first);
    }

    #[test]
    fn append_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/cases.jsonl");
        append_jsonl(&path, &[synthetic(1)]).unwrap();
        append_jsonl(&path, &[synthetic(2), synthetic(3)]).unwrap();
        let loaded: Vec<TestCase> = read_jsonl(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded[2], synthetic(3));
    }

    #[test]
    fn malformed_line_reports_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let mut text = to_jsonl_string(&[synthetic(0)]);
        text.push('\n');
        text.push_str("{not json}\n");
        fs::write(&path, text).unwrap();
        match read_jsonl::<TestCase>(&path) {
            Err(StoreError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_reads_empty() {
        let loaded: Vec<TestCase> = read_jsonl("/nonexistent/definitely/not.jsonl").unwrap();
        assert!(loaded.is_empty());
    }
}
