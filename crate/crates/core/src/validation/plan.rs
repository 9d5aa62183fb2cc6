use serde::{Deserialize, Serialize};

/// Reused target hypothesis.
pub const NLI_TARGET: &str = "That example is about [IDENTITY].";
/// Reused hate hypothesis.
pub const NLI_HATE: &str = "That contains hate speech.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Nli,
    Rule,
}

/// Text transform applied before a test scores the candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[serde(rename = "none")]
    Identity,
    RemoveFirstClause,
    RemoveFirstSentence,
    RemoveNegation,
    ExtractQuote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    ContainsAtLeastTwoClauses,
    ContainsAtLeastTwoSentences,
}

/// One hypothesis test: an optional transform, then either an NLI query or a
/// rule, then optional polarity reversal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisTest {
    pub kind: TestKind,
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_name: Option<RuleName>,
    pub negate: bool,
    /// Alternative hypotheses; the test entails if any alternative does.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub or_hypotheses: Vec<String>,
}

impl HypothesisTest {
    pub fn nli(template: impl Into<String>) -> Self {
        Self {
            kind: TestKind::Nli,
            transform: Transform::Identity,
            hypothesis_template: Some(template.into()),
            rule_name: None,
            negate: false,
            or_hypotheses: Vec::new(),
        }
    }

    pub fn rule(rule: RuleName) -> Self {
        Self {
            kind: TestKind::Rule,
            transform: Transform::Identity,
            hypothesis_template: None,
            rule_name: Some(rule),
            negate: false,
            or_hypotheses: Vec::new(),
        }
    }

    pub fn negated(mut self) -> Self {
        self.negate = !self.negate;
        self
    }

    pub fn after(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn or(mut self, alternative: impl Into<String>) -> Self {
        self.or_hypotheses.push(alternative.into());
        self
    }

    /// Hypothesis templates in evaluation order (primary first).
    pub fn templates(&self) -> impl Iterator<Item = &str> {
        self.hypothesis_template
            .as_deref()
            .into_iter()
            .chain(self.or_hypotheses.iter().map(String::as_str))
    }

    /// Structural check used when loading a registry.
    pub fn check(&self) -> Result<(), String> {
        match self.kind {
            TestKind::Nli => {
                if self
                    .hypothesis_template
                    .as_deref()
                    .is_none_or(|t| t.trim().is_empty())
                {
                    return Err("nli test needs a non-empty hypothesis_template".into());
                }
                if self.rule_name.is_some() {
                    return Err("nli test must not carry a rule_name".into());
                }
                if self.or_hypotheses.iter().any(|h| h.trim().is_empty()) {
                    return Err("empty alternative hypothesis".into());
                }
            }
            TestKind::Rule => {
                if self.rule_name.is_none() {
                    return Err("rule test needs a rule_name".into());
                }
                if self.hypothesis_template.is_some() || !self.or_hypotheses.is_empty() {
                    return Err("rule test must not carry hypotheses".into());
                }
            }
        }
        Ok(())
    }
}

/// Ordered, conjunctive list of tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationPlan {
    pub tests: Vec<HypothesisTest>,
    pub all_must_pass: bool,
}

impl ValidationPlan {
    pub fn new(tests: Vec<HypothesisTest>) -> Self {
        Self {
            tests,
            all_must_pass: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_layout() {
        let t = HypothesisTest::nli(NLI_HATE).negated();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"nli","transform":"none","hypothesis_template":"That contains hate speech.","negate":true}"#
        );
        let r = HypothesisTest::rule(RuleName::ContainsAtLeastTwoClauses);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"rule","transform":"none","rule_name":"contains_at_least_two_clauses","negate":false}"#
        );
        let back: HypothesisTest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn structural_checks() {
        assert!(HypothesisTest::nli("").check().is_err());
        let mut bad = HypothesisTest::rule(RuleName::ContainsAtLeastTwoSentences);
        bad.rule_name = None;
        assert!(bad.check().is_err());
        assert!(HypothesisTest::nli("x").or("y").check().is_ok());
    }

    #[test]
    fn templates_include_alternatives() {
        let t = HypothesisTest::nli("a").or("b");
        assert_eq!(t.templates().collect::<Vec<_>>(), vec!["a", "b"]);
    }
}
