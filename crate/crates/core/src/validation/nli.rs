//! NLI scorers: the HTTP client for the model service and offline stand-ins.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{join_url, ClientError, JsonClient, RetryPolicy};
use crate::Real;

#[derive(Debug, Error)]
pub enum NliError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("no recorded NLI response for premise {premise:?} / hypothesis {hypothesis:?}")]
    MissingFixture { premise: String, hypothesis: String },
    #[error("malformed NLI response: {0}")]
    Protocol(String),
    #[error("cannot read NLI fixtures {path}: {message}")]
    Fixture { path: String, message: String },
}

/// Logits in (entailment, neutral, contradiction) order.
pub type Logits = [Real; 3];

/// Anything that maps a (premise, hypothesis) pair to NLI logits.
pub trait NliClient: Send + Sync {
    fn logits(&self, premise: &str, hypothesis: &str) -> Result<Logits, NliError>;

    fn logits_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Logits>, NliError> {
        pairs.iter().map(|(p, h)| self.logits(p, h)).collect()
    }
}

impl<T: NliClient + ?Sized> NliClient for &T {
    fn logits(&self, premise: &str, hypothesis: &str) -> Result<Logits, NliError> {
        (**self).logits(premise, hypothesis)
    }
}

impl<T: NliClient + ?Sized> NliClient for Box<T> {
    fn logits(&self, premise: &str, hypothesis: &str) -> Result<Logits, NliError> {
        (**self).logits(premise, hypothesis)
    }
}

#[derive(Debug, Serialize)]
pub struct NliRequest<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NliResponse {
    pub logits: Vec<Real>,
}

#[derive(Debug, Serialize)]
pub struct NliBatchRequest<'a> {
    pub premise: Vec<&'a str>,
    pub hypothesis: Vec<&'a str>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NliBatchResponse {
    pub logits: Vec<Vec<Real>>,
}

fn to_triple(raw: &[Real]) -> Result<Logits, NliError> {
    <[Real; 3]>::try_from(raw)
        .map_err(|_| NliError::Protocol(format!("expected 3 logits, got {}", raw.len())))
}

/// Client for `POST /nli`.
#[derive(Debug, Clone)]
pub struct HttpNliClient {
    client: JsonClient,
    url: String,
}

impl HttpNliClient {
    pub fn new(base_url: &str, timeout: Duration, retry: RetryPolicy) -> Self {
        Self {
            client: JsonClient::new(timeout, retry),
            url: join_url(base_url, "nli"),
        }
    }
}

impl NliClient for HttpNliClient {
    fn logits(&self, premise: &str, hypothesis: &str) -> Result<Logits, NliError> {
        let response: NliResponse = self
            .client
            .post_json(&self.url, &NliRequest { premise, hypothesis })?;
        to_triple(&response.logits)
    }

    fn logits_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Logits>, NliError> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let request = NliBatchRequest {
            premise: pairs.iter().map(|(p, _)| *p).collect(),
            hypothesis: pairs.iter().map(|(_, h)| *h).collect(),
        };
        let response: NliBatchResponse = self.client.post_json(&self.url, &request)?;
        if response.logits.len() != pairs.len() {
            return Err(NliError::Protocol(format!(
                "batch of {} pairs answered with {} logit rows",
                pairs.len(),
                response.logits.len()
            )));
        }
        response.logits.iter().map(|row| to_triple(row)).collect()
    }
}

pub const ENTAIL_LOGITS: Logits = [4.0, 0.0, -4.0];
pub const CONTRADICT_LOGITS: Logits = [-4.0, 0.0, 4.0];

/// Answers every query with the same logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedNli(pub Logits);

impl FixedNli {
    pub fn always_entail() -> Self {
        Self(ENTAIL_LOGITS)
    }

    pub fn always_contradict() -> Self {
        Self(CONTRADICT_LOGITS)
    }
}

impl NliClient for FixedNli {
    fn logits(&self, _premise: &str, _hypothesis: &str) -> Result<Logits, NliError> {
        Ok(self.0)
    }
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for byte in part.bytes().chain(std::iter::once(0xff)) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Stable pseudo-random score in `[0, 1)` for a list of strings.
pub fn stable_unit(parts: &[&str]) -> Real {
    (fnv1a(parts) >> 11) as Real / (1u64 << 53) as Real
}

/// Deterministic stand-in that entails a fixed fraction of pairs, chosen by a
/// stable hash of the pair. Useful for exercising the pipeline offline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashNli {
    pub entail_rate: Real,
}

impl Default for HashNli {
    fn default() -> Self {
        Self { entail_rate: 0.8 }
    }
}

impl NliClient for HashNli {
    fn logits(&self, premise: &str, hypothesis: &str) -> Result<Logits, NliError> {
        let u = stable_unit(&[premise, hypothesis]);
        // Margin grows with distance from the decision point.
        let margin = 1.0 + 3.0 * (u - self.entail_rate).abs();
        Ok(if u < self.entail_rate {
            [margin, 0.0, -margin]
        } else {
            [-margin, 0.0, margin]
        })
    }
}

/// What [`ReplayNli`] answers for pairs it has no recording for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    Error,
    Entail,
    Contradict,
    Hash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedPair {
    pub premise: String,
    pub hypothesis: String,
    pub logits: Logits,
}

/// On-disk fixture layout for [`ReplayNli`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NliFixtures {
    #[serde(default)]
    pub fallback: Fallback,
    #[serde(default)]
    pub entries: Vec<RecordedPair>,
}

/// Replays recorded NLI responses.
#[derive(Debug, Clone, Default)]
pub struct ReplayNli {
    fallback: Fallback,
    recorded: HashMap<(String, String), Logits>,
}

impl ReplayNli {
    pub fn new(fixtures: NliFixtures) -> Self {
        let recorded = fixtures
            .entries
            .into_iter()
            .map(|e| ((e.premise, e.hypothesis), e.logits))
            .collect();
        Self {
            fallback: fixtures.fallback,
            recorded,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, NliError> {
        let path = path.as_ref();
        let fixture_err = |message: String| NliError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        let fixtures: NliFixtures =
            serde_json::from_str(&text).map_err(|e| fixture_err(e.to_string()))?;
        Ok(Self::new(fixtures))
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn record(&mut self, premise: &str, hypothesis: &str, logits: Logits) {
        self.recorded
            .insert((premise.to_string(), hypothesis.to_string()), logits);
    }

    pub fn len(&self) -> usize {
        self.recorded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recorded.is_empty()
    }
}

impl NliClient for ReplayNli {
    fn logits(&self, premise: &str, hypothesis: &str) -> Result<Logits, NliError> {
        if let Some(l) = self
            .recorded
            .get(&(premise.to_string(), hypothesis.to_string()))
        {
            return Ok(*l);
        }
        match self.fallback {
            Fallback::Error => Err(NliError::MissingFixture {
                premise: premise.to_string(),
                hypothesis: hypothesis.to_string(),
            }),
            Fallback::Entail => Ok(ENTAIL_LOGITS),
            Fallback::Contradict => Ok(CONTRADICT_LOGITS),
            Fallback::Hash => HashNli::default().logits(premise, hypothesis),
        }
    }
}
