use hatecheck_forge::dataset::TestCase;
use hatecheck_forge::validation::{Outcome, TestResult};
use serde::{Deserialize, Serialize};

/// One line of the audit file: why a candidate was kept or filtered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    pub cell: String,
    pub kept: bool,
    /// Position of the failing test in the plan.
    pub failed_test: Option<usize>,
    pub reason: Option<String>,
}

impl AuditRecord {
    pub fn for_case(case: &TestCase) -> Self {
        let failed = case.test_results.iter().position(|r| !r.passed);
        Self {
            id: case.id.clone(),
            cell: case.cell().to_string(),
            kept: case.kept,
            failed_test: failed,
            reason: failed.map(|i| describe(&case.test_results[i])),
        }
    }
}

/// Short human-readable account of a test result.
pub fn describe(r: &TestResult) -> String {
    let t = &r.test;
    let polarity = if t.negate { "not " } else { "" };
    let transform = serde_json::to_value(t.transform)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    match &r.outcome {
        Outcome::TransformFailed { reason } => format!("transform {transform} failed: {reason}"),
        Outcome::Rule { value } => {
            let rule = t
                .rule_name
                .and_then(|n| serde_json::to_value(n).ok())
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            format!("rule {polarity}{rule} evaluated to {value}")
        }
        Outcome::Nli { p_entail, evaluations } => {
            let hyps: Vec<&str> = evaluations.iter().map(|e| e.hypothesis.as_str()).collect();
            format!(
                "expected {polarity}entailment of {:?} after {transform}; p_entail={p_entail:.4}",
                hyps.join(" | ")
            )
        }
    }
}
