//! Detector and perplexity scorers: HTTP clients and offline stand-ins.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::EvalError;
use crate::dataset::TestCase;
use crate::http::{join_url, JsonClient, RetryPolicy};
use crate::validation::nli::stable_unit;
use crate::Real;

/// Maps a text to a hatefulness score in `[0, 1]`.
pub trait DetectorClient: Send + Sync {
    fn score(&self, text: &str) -> Result<Real, EvalError>;
}

/// Maps a text to its perplexity under a language model.
pub trait ScoringClient: Send + Sync {
    fn perplexity(&self, text: &str) -> Result<Real, EvalError>;
}

#[derive(Debug, Serialize)]
pub struct TextRequest<'a> {
    pub text: &'a str,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetectResponse {
    pub score: Real,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PplResponse {
    pub ppl: Real,
}

/// Client for `POST /detect`.
#[derive(Debug, Clone)]
pub struct HttpDetector {
    client: JsonClient,
    url: String,
}

impl HttpDetector {
    pub fn new(base_url: &str, timeout: Duration, retry: RetryPolicy) -> Self {
        Self {
            client: JsonClient::new(timeout, retry),
            url: join_url(base_url, "detect"),
        }
    }
}

impl DetectorClient for HttpDetector {
    fn score(&self, text: &str) -> Result<Real, EvalError> {
        let r: DetectResponse = self.client.post_json(&self.url, &TextRequest { text })?;
        check_score(r.score)
    }
}

/// Client for `POST /ppl`.
#[derive(Debug, Clone)]
pub struct HttpScorer {
    client: JsonClient,
    url: String,
}

impl HttpScorer {
    pub fn new(base_url: &str, timeout: Duration, retry: RetryPolicy) -> Self {
        Self {
            client: JsonClient::new(timeout, retry),
            url: join_url(base_url, "ppl"),
        }
    }
}

impl ScoringClient for HttpScorer {
    fn perplexity(&self, text: &str) -> Result<Real, EvalError> {
        let r: PplResponse = self.client.post_json(&self.url, &TextRequest { text })?;
        if r.ppl.is_finite() && r.ppl >= 1.0 {
            Ok(r.ppl)
        } else {
            Err(EvalError::InvalidScore(r.ppl))
        }
    }
}

fn check_score(score: Real) -> Result<Real, EvalError> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(EvalError::InvalidScore(score))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDetector(pub Real);

impl DetectorClient for ConstantDetector {
    fn score(&self, _text: &str) -> Result<Real, EvalError> {
        check_score(self.0)
    }
}

/// Stable pseudo-random score per text.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HashDetector;

impl DetectorClient for HashDetector {
    fn score(&self, text: &str) -> Result<Real, EvalError> {
        Ok(stable_unit(&["detect", text]))
    }
}

/// Looks scores up by exact text; unknown texts are failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableDetector {
    scores: HashMap<String, Real>,
}

impl TableDetector {
    pub fn new(scores: impl IntoIterator<Item = (String, Real)>) -> Self {
        Self {
            scores: scores.into_iter().collect(),
        }
    }

    /// Scores every case with its gold label (1.0 hateful, 0.0 otherwise).
    pub fn oracle(cases: &[TestCase]) -> Self {
        Self::new(cases.iter().map(|c| {
            let score = if c.gold_label.is_hateful() { 1.0 } else { 0.0 };
            (c.text.clone(), score)
        }))
    }
}

impl DetectorClient for TableDetector {
    fn score(&self, text: &str) -> Result<Real, EvalError> {
        self.scores
            .get(text)
            .copied()
            .ok_or_else(|| EvalError::MissingScore(text.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantScorer(pub Real);

impl ScoringClient for ConstantScorer {
    fn perplexity(&self, _text: &str) -> Result<Real, EvalError> {
        Ok(self.0)
    }
}

/// Perplexity `10 + token count`: deterministic and text-dependent.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LengthScorer;

impl ScoringClient for LengthScorer {
    fn perplexity(&self, text: &str) -> Result<Real, EvalError> {
        Ok(10.0 + tokenize(text).len() as Real)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableScorer {
    ppl: HashMap<String, Real>,
}

impl TableScorer {
    pub fn new(ppl: impl IntoIterator<Item = (String, Real)>) -> Self {
        Self {
            ppl: ppl.into_iter().collect(),
        }
    }
}

impl ScoringClient for TableScorer {
    fn perplexity(&self, text: &str) -> Result<Real, EvalError> {
        self.ppl
            .get(text)
            .copied()
            .ok_or_else(|| EvalError::MissingScore(text.to_string()))
    }
}
