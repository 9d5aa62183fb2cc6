//! Chat-completion client: requests candidate messages for a prompt and
//! turns the numbered-list reply into [`Candidate`] records.

mod backend;
mod parse;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{ClientError, RetryPolicy};
use crate::prompt::{PromptBundle, PromptSkeleton};
use crate::registry::{FunctionalityId, Registry, TemplateError};
use crate::Real;

pub use backend::{
    ChatBackend, ChatMessage, ChatRequest, ChatResponse, HttpChatBackend, MockChatBackend,
    API_KEY_ENV,
};
pub use parse::{parse_numbered_list, ParseError};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("model returned no usable list items")]
    Refusal { raw: String },
    #[error("missing credentials: set {API_KEY_ENV}")]
    MissingCredentials,
    #[error("no canned completion at {path}")]
    MockMissing { path: String },
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unknown target group {0:?}")]
    UnknownGroup(String),
    #[error("unknown functionality {0}")]
    UnknownFunctionality(FunctionalityId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: Real,
    pub n_requested: usize,
    pub max_retries: u32,
    /// Per-request timeout in seconds.
    pub timeout_secs: u64,
    /// Free text recording which model checkpoint produced the data.
    pub seed_note: String,
    /// Chat requests issued per cell before giving up on reaching
    /// `n_requested` unique candidates.
    pub calls_per_cell: u32,
    /// Value of the request's `n` field; omitted when unset.
    pub choices_per_call: Option<u32>,
    /// Cells requested concurrently.
    pub parallelism: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-3.5-turbo-0613".to_string(),
            temperature: 0.5,
            n_requested: 40,
            max_retries: 3,
            timeout_secs: 120,
            seed_note: String::new(),
            calls_per_cell: 1,
            choices_per_call: None,
            parallelism: 4,
        }
    }
}

impl GenerationConfig {
    /// Greedy decoding, used while iterating on prompts.
    pub fn development() -> Self {
        Self {
            temperature: 0.0,
            n_requested: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: &str| Err(GenerationError::Config(m.to_string()));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must be within [0, 2]");
        }
        if self.n_requested == 0 {
            return bad("n_requested must be at least 1");
        }
        if self.timeout_secs == 0 {
            return bad("timeout must be positive");
        }
        if self.calls_per_cell == 0 {
            return bad("calls_per_cell must be at least 1");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            ..RetryPolicy::default()
        }
    }
}

/// One (functionality, group) cell; `group` is `None` for functionalities
/// that target no protected group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub functionality: FunctionalityId,
    pub group: Option<String>,
}

impl CellKey {
    pub fn new(functionality: FunctionalityId, group: Option<&str>) -> Self {
        Self {
            functionality,
            group: group.map(str::to_string),
        }
    }

    pub fn group_label(&self) -> &str {
        self.group.as_deref().unwrap_or("none")
    }

    /// File-name friendly form, e.g. `F1__women`.
    pub fn file_stem(&self) -> String {
        format!("{}__{}", self.functionality, self.group_label())
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.functionality, self.group_label())
    }
}

impl FromStr for CellKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (fid, group) = s
            .split_once('/')
            .ok_or_else(|| format!("cell key must look like F1/women, got {s:?}"))?;
        let functionality = fid.parse()?;
        let group = (group != "none").then(|| group.to_string());
        Ok(Self {
            functionality,
            group,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub functionality_id: FunctionalityId,
    pub target_group: Option<String>,
    pub text: String,
    /// Position of the item among all items parsed for the cell.
    pub raw_index: usize,
    pub created_at: DateTime<Utc>,
}

impl Candidate {
    pub fn cell(&self) -> CellKey {
        CellKey::new(self.functionality_id, self.target_group.as_deref())
    }
}

/// Source of `created_at` timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn epoch() -> Self {
        Clock::Fixed(DateTime::<Utc>::UNIX_EPOCH)
    }

    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => *t,
        }
    }
}

/// Requests candidates for one cell.
///
/// Issues up to `calls_per_cell` requests, parses every returned choice,
/// drops exact duplicates (first occurrence wins) and truncates to
/// `n_requested`. Returning fewer than requested is logged, never padded.
pub fn generate_candidates(
    bundle: &PromptBundle,
    cell: &CellKey,
    cfg: &GenerationConfig,
    backend: &dyn ChatBackend,
    clock: Clock,
) -> Result<Vec<Candidate>, GenerationError> {
    let mut texts: Vec<(usize, String)> = Vec::new();
    let mut seen = HashSet::new();
    let mut parsed_total = 0usize;
    let mut last_raw = String::new();
    for call in 0..cfg.calls_per_cell {
        let choices = backend.complete(bundle, cell, cfg, call)?;
        for raw in choices {
            match parse_numbered_list(&raw) {
                Ok(items) => {
                    for item in items {
                        let index = parsed_total;
                        parsed_total += 1;
                        if seen.insert(item.clone()) {
                            texts.push((index, item));
                        }
                    }
                }
                Err(ParseError) => warn!("{cell}: completion without list items"),
            }
            last_raw = raw;
        }
        if texts.len() >= bundle.n_requested {
            break;
        }
    }
    if texts.is_empty() {
        return Err(GenerationError::Refusal { raw: last_raw });
    }
    texts.truncate(bundle.n_requested);
    if texts.len() < bundle.n_requested {
        info!(
            "{cell}: {} of {} requested candidates",
            texts.len(),
            bundle.n_requested
        );
    }
    let created_at = clock.now();
    Ok(texts
        .into_iter()
        .map(|(raw_index, text)| Candidate {
            id: format!(
                "{}-{}-{:03}",
                cell.functionality,
                cell.group_label(),
                raw_index
            ),
            functionality_id: cell.functionality,
            target_group: cell.group.clone(),
            text,
            raw_index,
            created_at,
        })
        .collect())
}

/// Every (functionality, group) cell of the registry, optionally filtered,
/// in registry order.
pub fn cells(
    registry: &Registry,
    functionalities: Option<&[FunctionalityId]>,
    groups: Option<&[String]>,
) -> Vec<CellKey> {
    let mut out = Vec::new();
    for f in registry.functionalities() {
        if functionalities.is_some_and(|only| !only.contains(&f.id)) {
            continue;
        }
        for g in registry.applicable_groups(f) {
            if let (Some(only), Some(g)) = (groups, g) {
                if !only.iter().any(|name| name == &g.name) {
                    continue;
                }
            }
            out.push(CellKey::new(f.id, g.map(|g| g.name.as_str())));
        }
    }
    out
}

/// A cell and what generating it produced.
pub type CellOutcome = (CellKey, Result<Vec<Candidate>, GenerationError>);

/// Generates several cells with at most `cfg.parallelism` in flight.
/// Results come back in input order.
pub fn generate_cells(
    registry: &Registry,
    skeleton: &PromptSkeleton,
    cells: &[CellKey],
    cfg: &GenerationConfig,
    backend: &dyn ChatBackend,
    clock: Clock,
) -> Result<Vec<CellOutcome>, GenerationError> {
    cfg.validate()?;
    let run_cell = |cell: &CellKey| -> Result<Vec<Candidate>, GenerationError> {
        let f = registry
            .functionality(cell.functionality)
            .ok_or(GenerationError::UnknownFunctionality(cell.functionality))?;
        let group = match &cell.group {
            Some(name) => Some(
                registry
                    .group(name)
                    .ok_or_else(|| GenerationError::UnknownGroup(name.clone()))?,
            ),
            None => None,
        };
        let bundle = skeleton.build(f, group, cfg)?;
        generate_candidates(&bundle, cell, cfg, backend, clock)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| GenerationError::Config(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|cell| (cell.clone(), run_cell(cell)))
            .collect()
    }))
}
