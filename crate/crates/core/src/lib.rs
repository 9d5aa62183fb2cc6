//! Synthesis, validation and diagnostic evaluation of functional test suites
//! for hate speech detectors.
//!
//! The pipeline has four stages:
//!
//! 1. [`prompt`] turns a [`registry::Functionality`] and a
//!    [`registry::TargetGroup`] into a chat prompt.
//! 2. [`generation`] sends the prompt to a chat-completion endpoint and parses
//!    the numbered list it returns into [`generation::Candidate`]s.
//! 3. [`validation`] runs every candidate through its functionality's
//!    hypothesis tests (rules and NLI entailment queries) and keeps only the
//!    candidates that pass all of them.
//! 4. [`dataset`] persists the verdicts and computes passing rates, and
//!    [`eval`] scores diversity, naturalness and detector accuracy.
//!
//! Numeric routines are generic over [`Scalar`]; the aliases below pin the
//! concrete `f64` instantiations used throughout the pipeline.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod generation;
pub mod http;
pub mod prompt;
pub mod registry;
pub mod scalar;
pub mod validation;

pub use error::Error;
pub use scalar::Scalar;

/// Scalar type used by the pipeline's persisted records and reports.
pub type Real = f64;

pub type EntailmentScore = validation::EntailmentScore<Real>;
pub type DatasetStats = dataset::DatasetStats<Real>;
pub type EvalReport = eval::EvalReport<Real>;
pub type TTestResult = eval::TTestResult<Real>;
pub type MeanStd = eval::MeanStd<Real>;

pub use dataset::{Source, TestCase};
pub use generation::{Candidate, GenerationConfig};
pub use prompt::PromptBundle;
pub use registry::{Functionality, FunctionalityId, Registry, TargetGroup};
pub use validation::{HypothesisTest, TestResult, ValidationPlan};
