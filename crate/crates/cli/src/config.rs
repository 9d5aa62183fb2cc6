//! Tool configuration: defaults, overlaid by a TOML file, then by
//! `HATECHECK_FORGE_*` environment variables, then by command-line flags.

use std::path::{Path, PathBuf};

use hatecheck_forge::eval::{EvalOptions, Smoothing, DEFAULT_SUBSAMPLES};
use hatecheck_forge::generation::GenerationConfig;
use hatecheck_forge::prompt::PromptSkeleton;
use hatecheck_forge::validation::DEFAULT_THRESHOLD;
use hatecheck_forge::Real;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "HATECHECK_FORGE_";

/// Base URLs of the services. Each may be left unset when a mock is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoints {
    /// Full chat-completion URL; overrides `generation.endpoint_url`.
    pub llm: Option<String>,
    pub nli: Option<String>,
    pub ppl: Option<String>,
    pub detect: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub bleu_orders: Vec<usize>,
    /// Unset means no smoothing.
    pub smoothing_epsilon: Option<f64>,
    pub subsamples: usize,
    /// Subsample size when no reference dataset is given.
    pub subsample_size: Option<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            bleu_orders: vec![2, 3, 4],
            smoothing_epsilon: None,
            subsamples: DEFAULT_SUBSAMPLES,
            subsample_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    /// Registry file; the bundled registry when unset.
    pub registry: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub parallelism: usize,
    pub nli_threshold: Real,
    /// Timeout for NLI, detector and perplexity requests.
    pub service_timeout_secs: u64,
    pub service_max_retries: u32,
    pub endpoints: Endpoints,
    pub generation: GenerationConfig,
    pub prompt: PromptSkeleton,
    pub evaluation: EvaluationConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            registry: None,
            out: PathBuf::from("out"),
            seed: 0,
            parallelism: 4,
            nli_threshold: DEFAULT_THRESHOLD,
            service_timeout_secs: 60,
            service_max_retries: 3,
            endpoints: Endpoints::default(),
            generation: GenerationConfig::default(),
            prompt: PromptSkeleton::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{ENV_PREFIX}{key}={value:?}: {e}")))
}

impl ToolConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `HATECHECK_FORGE_*` overrides read through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        let get = |key: &str| lookup(&format!("{ENV_PREFIX}{key}"));
        if let Some(v) = get("REGISTRY") {
            self.registry = Some(v.into());
        }
        if let Some(v) = get("OUT") {
            self.out = v.into();
        }
        if let Some(v) = get("SEED") {
            self.seed = parse_env("SEED", &v)?;
        }
        if let Some(v) = get("PARALLELISM") {
            self.parallelism = parse_env("PARALLELISM", &v)?;
        }
        if let Some(v) = get("NLI_THRESHOLD") {
            self.nli_threshold = parse_env("NLI_THRESHOLD", &v)?;
        }
        if let Some(v) = get("TEMPERATURE") {
            self.generation.temperature = parse_env("TEMPERATURE", &v)?;
        }
        if let Some(v) = get("N_PER_CELL") {
            self.generation.n_requested = parse_env("N_PER_CELL", &v)?;
        }
        if let Some(v) = get("MODEL") {
            self.generation.model_name = v;
        }
        for (key, slot) in [
            ("LLM_URL", &mut self.endpoints.llm),
            ("NLI_URL", &mut self.endpoints.nli),
            ("PPL_URL", &mut self.endpoints.ppl),
            ("DETECT_URL", &mut self.endpoints.detect),
        ] {
            if let Some(v) = get(key) {
                *slot = Some(v);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.parallelism == 0 {
            return Err(CliError::Config("parallelism must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.nli_threshold) {
            return Err(CliError::Config("nli_threshold must be within [0, 1)".into()));
        }
        if self.evaluation.bleu_orders.contains(&0) {
            return Err(CliError::Config("BLEU orders must be at least 1".into()));
        }
        if self.evaluation.subsamples == 0 {
            return Err(CliError::Config("evaluation.subsamples must be at least 1".into()));
        }
        if let Some(e) = self.evaluation.smoothing_epsilon {
            if !(e > 0.0) {
                return Err(CliError::Config("smoothing_epsilon must be positive".into()));
            }
        }
        self.effective_generation()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Generation settings with the `llm` endpoint and `parallelism` folded in.
    pub fn effective_generation(&self) -> GenerationConfig {
        let mut g = self.generation.clone();
        if let Some(url) = &self.endpoints.llm {
            g.endpoint_url = url.clone();
        }
        g.parallelism = self.parallelism;
        g
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            bleu_orders: self.evaluation.bleu_orders.clone(),
            smoothing: match self.evaluation.smoothing_epsilon {
                Some(epsilon) => Smoothing::Epsilon { epsilon },
                None => Smoothing::None,
            },
            subsamples: self.evaluation.subsamples,
            seed: self.seed,
            subsample_size: self.evaluation.subsample_size,
            parallelism: self.parallelism,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults() {
        let c = ToolConfig::default();
        assert_eq!(c.generation.n_requested, 40);
        assert_eq!(c.nli_threshold, 0.5);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = ToolConfig::from_toml_str(
            "seed = 7\n[generation]\nn_requested = 10\n[endpoints]\nnli = \"http://localhost:8000\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.generation.n_requested, 10);
        assert_eq!(c.generation.temperature, 0.5);
        assert_eq!(c.endpoints.nli.as_deref(), Some("http://localhost:8000"));
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ToolConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(matches!(ToolConfig::from_toml_str("sede = 1\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn env_overrides() {
        let env: HashMap<String, String> = [
            ("HATECHECK_FORGE_SEED", "42"),
            ("HATECHECK_FORGE_N_PER_CELL", "5"),
            ("HATECHECK_FORGE_NLI_URL", "http://nli"),
            ("HATECHECK_FORGE_OUT", "/tmp/x"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let mut c = ToolConfig::default();
        c.apply_env(|k| env.get(k).cloned()).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.generation.n_requested, 5);
        assert_eq!(c.endpoints.nli.as_deref(), Some("http://nli"));
        assert_eq!(c.out, PathBuf::from("/tmp/x"));

        let mut c = ToolConfig::default();
        let bad = c.apply_env(|k| (k == "HATECHECK_FORGE_SEED").then(|| "abc".to_string()));
        assert!(matches!(bad, Err(CliError::Config(_))));
    }

    #[test]
    fn validation() {
        let mut c = ToolConfig::default();
        c.generation.n_requested = 0;
        assert!(c.validate().is_err());
        let mut c = ToolConfig::default();
        c.evaluation.smoothing_epsilon = Some(0.0);
        assert!(c.validate().is_err());
        let mut c = ToolConfig::default();
        c.endpoints.llm = Some("http://x/v1/chat/completions".into());
        assert_eq!(c.effective_generation().endpoint_url, "http://x/v1/chat/completions");
    }
}
