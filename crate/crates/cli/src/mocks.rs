//! Parsing of `--mock-*` flag values.

use std::path::Path;

use hatecheck_forge::dataset::TestCase;
use hatecheck_forge::eval::{
    ConstantDetector, ConstantScorer, DetectorClient, HashDetector, LengthScorer, ScoringClient,
    TableDetector,
};
use hatecheck_forge::validation::nli::{FixedNli, HashNli, ReplayNli};
use hatecheck_forge::validation::NliClient;

use crate::error::CliError;

/// `entail`, `contradict`, `hash`, or a path to a recorded-fixture file.
pub fn nli(mode: &str) -> Result<Box<dyn NliClient>, CliError> {
    Ok(match mode {
        "entail" => Box::new(FixedNli::always_entail()),
        "contradict" => Box::new(FixedNli::always_contradict()),
        "hash" => Box::new(HashNli::default()),
        path => Box::new(ReplayNli::from_path(Path::new(path))?),
    })
}

fn constant(mode: &str, what: &str) -> Result<Option<f64>, CliError> {
    match mode.strip_prefix("constant:") {
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("--mock-{what}: bad constant {v:?}"))),
        None => Ok(None),
    }
}

/// `oracle` (scores each case by its gold label), `hash` or `constant:X`.
pub fn detector(mode: &str, cases: &[TestCase]) -> Result<Box<dyn DetectorClient>, CliError> {
    if let Some(v) = constant(mode, "detect")? {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Config("--mock-detect constant must be within [0, 1]".into()));
        }
        return Ok(Box::new(ConstantDetector(v)));
    }
    match mode {
        "oracle" => Ok(Box::new(TableDetector::oracle(cases))),
        "hash" => Ok(Box::new(HashDetector)),
        other => Err(CliError::Config(format!(
            "--mock-detect: expected oracle, hash or constant:X, got {other:?}"
        ))),
    }
}

/// `length` or `constant:X`.
pub fn scorer(mode: &str) -> Result<Box<dyn ScoringClient>, CliError> {
    if let Some(v) = constant(mode, "ppl")? {
        return Ok(Box::new(ConstantScorer(v)));
    }
    match mode {
        "length" => Ok(Box::new(LengthScorer)),
        other => Err(CliError::Config(format!(
            "--mock-ppl: expected length or constant:X, got {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs() {
        assert!(nli("entail").unwrap().logits("a", "b").unwrap()[0] > 0.0);
        assert!(matches!(nli("/no/such/file.json"), Err(CliError::Config(_))));
        assert_eq!(detector("constant:0.25", &[]).unwrap().score("x").unwrap(), 0.25);
        assert!(detector("constant:2", &[]).is_err());
        assert!(detector("nope", &[]).is_err());
        assert_eq!(scorer("constant:12").unwrap().perplexity("x").unwrap(), 12.0);
        assert!(scorer("length").is_ok());
        assert!(scorer("constant:x").is_err());
    }
}
