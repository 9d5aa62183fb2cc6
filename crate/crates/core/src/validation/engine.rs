use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::nli::{NliClient, NliError};
use super::plan::{HypothesisTest, RuleName, TestKind, Transform, ValidationPlan};
use super::softmax::{EntailmentScore, NumericError};
use super::text::{self, TransformError};
use crate::registry::{fill_masks, TargetGroup, TemplateError, IDENTITY_MASK};
use crate::Real;

/// Default entailment threshold on the two-way softmax.
pub const DEFAULT_THRESHOLD: Real = 0.5;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("NLI scoring failed: {0}")]
    Nli(#[from] NliError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("cannot build hypothesis: {0}")]
    Template(#[from] TemplateError),
    #[error("hypothesis {0:?} needs a target group but none is available")]
    UnresolvedIdentity(String),
    #[error("validation plan is empty")]
    EmptyPlan,
}

impl ValidationError {
    /// Infrastructure failures leave the candidate unvalidated (retryable);
    /// everything else is a configuration or data problem.
    pub fn is_transport(&self) -> bool {
        matches!(self, ValidationError::Nli(NliError::Client(_)))
    }
}

/// Groups available for resolving `[IDENTITY]` in hypotheses.
///
/// With a group, `[IDENTITY]` becomes its identity term. Without one (for
/// functionalities that target no protected group) the hypothesis is expanded
/// over every known group and entails if any expansion does.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisContext<'a> {
    pub group: Option<&'a TargetGroup>,
    pub all_groups: &'a [TargetGroup],
}

impl<'a> HypothesisContext<'a> {
    pub fn new(group: Option<&'a TargetGroup>, all_groups: &'a [TargetGroup]) -> Self {
        Self { group, all_groups }
    }

    pub fn hypotheses(&self, template: &str) -> Result<Vec<String>, ValidationError> {
        if !template.contains(IDENTITY_MASK) {
            return Ok(vec![fill_masks(template, None)?]);
        }
        match self.group {
            Some(g) => Ok(vec![fill_masks(template, Some(g))?]),
            None if !self.all_groups.is_empty() => self
                .all_groups
                .iter()
                .map(|g| fill_masks(template, Some(g)).map_err(Into::into))
                .collect(),
            None => Err(ValidationError::UnresolvedIdentity(template.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScore {
    pub hypothesis: String,
    pub score: EntailmentScore<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Rule { value: bool },
    /// `p_entail` is the maximum over the evaluated hypotheses.
    Nli {
        p_entail: Real,
        evaluations: Vec<HypothesisScore>,
    },
    TransformFailed { reason: String },
}

/// Audit record for one executed test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: HypothesisTest,
    /// `None` when the transform failed.
    pub transformed_text: Option<String>,
    pub outcome: Outcome,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kept: bool,
    pub results: Vec<TestResult>,
}

impl Verdict {
    pub fn first_failure(&self) -> Option<&TestResult> {
        self.results.iter().find(|r| !r.passed)
    }
}

pub fn apply_transform(transform: Transform, text: &str) -> Result<String, TransformError> {
    match transform {
        Transform::Identity => Ok(text.to_string()),
        Transform::RemoveFirstClause => text::remove_first_clause(text),
        Transform::RemoveFirstSentence => text::remove_first_sentence(text),
        Transform::RemoveNegation => Ok(text::remove_negation(text)),
        Transform::ExtractQuote => text::extract_quote(text),
    }
}

pub fn apply_rule(rule: RuleName, text: &str) -> bool {
    match rule {
        RuleName::ContainsAtLeastTwoClauses => text::contains_at_least_two_clauses(text),
        RuleName::ContainsAtLeastTwoSentences => text::contains_at_least_two_sentences(text),
    }
}

/// Runs one test: transform, then rule or NLI scoring, then polarity.
///
/// A failed transform fails the test closed. NLI transport failures are
/// returned as errors rather than folded into a verdict.
pub fn evaluate_test(
    test: &HypothesisTest,
    candidate_text: &str,
    ctx: &HypothesisContext<'_>,
    nli: &dyn NliClient,
    threshold: Real,
) -> Result<TestResult, ValidationError> {
    let transformed = match apply_transform(test.transform, candidate_text) {
        Ok(t) => t,
        Err(e) => {
            return Ok(TestResult {
                test: test.clone(),
                transformed_text: None,
                outcome: Outcome::TransformFailed {
                    reason: e.to_string(),
                },
                passed: false,
            })
        }
    };

    let (outcome, raw_pass) = match test.kind {
        TestKind::Rule => {
            let rule = test
                .rule_name
                .expect("rule tests carry a rule name (checked at registry load)");
            let value = apply_rule(rule, &transformed);
            (Outcome::Rule { value }, value)
        }
        TestKind::Nli => {
            let mut hypotheses = Vec::new();
            for template in test.templates() {
                hypotheses.extend(ctx.hypotheses(template)?);
            }
            let pairs: Vec<(&str, &str)> = hypotheses
                .iter()
                .map(|h| (transformed.as_str(), h.as_str()))
                .collect();
            let logits = nli.logits_batch(&pairs)?;
            let mut evaluations = Vec::with_capacity(hypotheses.len());
            let mut best = Real::NEG_INFINITY;
            for (hypothesis, l) in hypotheses.into_iter().zip(logits) {
                let score = EntailmentScore::from_logits(l)?;
                best = best.max(score.p_entail);
                evaluations.push(HypothesisScore { hypothesis, score });
            }
            let entailed = best > threshold;
            (
                Outcome::Nli {
                    p_entail: best,
                    evaluations,
                },
                entailed,
            )
        }
    };

    Ok(TestResult {
        test: test.clone(),
        transformed_text: Some(transformed),
        outcome,
        passed: raw_pass != test.negate,
    })
}

/// Runs a plan in order, stopping after the first failing test (which is
/// still recorded). The candidate is kept iff every test passed.
pub fn validate_text(
    candidate_text: &str,
    plan: &ValidationPlan,
    ctx: &HypothesisContext<'_>,
    nli: &dyn NliClient,
    threshold: Real,
) -> Result<Verdict, ValidationError> {
    if plan.tests.is_empty() {
        return Err(ValidationError::EmptyPlan);
    }
    let mut results = Vec::with_capacity(plan.tests.len());
    for test in &plan.tests {
        let result = evaluate_test(test, candidate_text, ctx, nli, threshold)?;
        let passed = result.passed;
        results.push(result);
        if !passed {
            return Ok(Verdict {
                kept: false,
                results,
            });
        }
    }
    Ok(Verdict {
        kept: true,
        results,
    })
}
