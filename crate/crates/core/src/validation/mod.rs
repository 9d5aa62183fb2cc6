//! Hypothesis-test validation of generated candidates.
//!
//! Each functionality carries a [`ValidationPlan`]: an ordered list of
//! [`HypothesisTest`]s combined conjunctively. A test optionally transforms
//! the candidate (drop the first clause or sentence, strip negations, pull
//! out a quote), then either applies a rule or asks an NLI model whether the
//! text entails a hypothesis, and finally applies its polarity.

mod engine;
pub mod nli;
mod plan;
mod softmax;
pub mod text;

pub use engine::{
    apply_rule, apply_transform, evaluate_test, validate_text, HypothesisContext,
    HypothesisScore, Outcome, TestResult, ValidationError, Verdict, DEFAULT_THRESHOLD,
};
pub use nli::{NliClient, NliError};
pub use plan::{HypothesisTest, RuleName, TestKind, Transform, ValidationPlan, NLI_HATE, NLI_TARGET};
pub use softmax::{entailment_probability, EntailmentScore, NumericError};
pub use text::TransformError;
