use std::env;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{CellKey, GenerationConfig, GenerationError};
use crate::http::JsonClient;
use crate::prompt::PromptBundle;
use crate::Real;

/// Environment variable holding the chat-completion API key.
pub const API_KEY_ENV: &str = "HATECHECK_FORGE_API_KEY";

/// A chat-completion provider. Returns the content of each returned choice.
pub trait ChatBackend: Send + Sync {
    fn complete(
        &self,
        bundle: &PromptBundle,
        cell: &CellKey,
        cfg: &GenerationConfig,
        call: u32,
    ) -> Result<Vec<String>, GenerationError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

impl ChatRequest {
    pub fn from_bundle(bundle: &PromptBundle, cfg: &GenerationConfig) -> Self {
        Self {
            model: cfg.model_name.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: bundle.system_prompt.clone(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: bundle.user_prompt.clone(),
                },
            ],
            temperature: bundle.temperature,
            n: cfg.choices_per_call,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChatChoice {
    pub message: ChatChoiceMessage,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChatChoiceMessage {
    #[serde(default)]
    pub content: Option<String>,
}

/// OpenAI-style `chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    client: JsonClient,
    url: String,
}

impl HttpChatBackend {
    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(cfg: &GenerationConfig) -> Result<Self, GenerationError> {
        let key = env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(GenerationError::MissingCredentials)?;
        Ok(Self::with_key(cfg, Some(key)))
    }

    pub fn with_key(cfg: &GenerationConfig, key: Option<String>) -> Self {
        let mut client = JsonClient::new(cfg.timeout(), cfg.retry_policy());
        if let Some(key) = key {
            client = client.with_bearer(key);
        }
        Self {
            client,
            url: cfg.endpoint_url.clone(),
        }
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(
        &self,
        bundle: &PromptBundle,
        _cell: &CellKey,
        cfg: &GenerationConfig,
        _call: u32,
    ) -> Result<Vec<String>, GenerationError> {
        let request = ChatRequest::from_bundle(bundle, cfg);
        let response: ChatResponse = self.client.post_json(&self.url, &request)?;
        let contents: Vec<String> = response
            .choices
            .into_iter()
            .filter_map(|c| c.message.content)
            .collect();
        if contents.iter().all(|c| c.trim().is_empty()) {
            return Err(GenerationError::Refusal {
                raw: contents.join("\n"),
            });
        }
        Ok(contents)
    }
}

/// Serves canned completions from `<dir>/<F>__<group>.txt`
/// (`<F>__none.txt` for cells without a group).
#[derive(Debug, Clone)]
pub struct MockChatBackend {
    dir: PathBuf,
}

impl MockChatBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, cell: &CellKey) -> PathBuf {
        self.dir.join(format!("{}.txt", cell.file_stem()))
    }
}

impl ChatBackend for MockChatBackend {
    fn complete(
        &self,
        _bundle: &PromptBundle,
        cell: &CellKey,
        _cfg: &GenerationConfig,
        _call: u32,
    ) -> Result<Vec<String>, GenerationError> {
        let path = self.path_for(cell);
        fs::read_to_string(&path)
            .map(|raw| vec![raw])
            .map_err(|_| GenerationError::MockMissing {
                path: path.display().to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_format() {
        let bundle = PromptBundle {
            system_prompt: "sys".into(),
            user_prompt: "user".into(),
            temperature: 0.5,
            n_requested: 40,
        };
        let cfg = GenerationConfig::default();
        let json = serde_json::to_value(ChatRequest::from_bundle(&bundle, &cfg)).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "model": "gpt-3.5-turbo-0613",
                "messages": [
                    {"role": "system", "content": "sys"},
                    {"role": "user", "content": "user"}
                ],
                "temperature": 0.5
            })
        );
        let cfg = GenerationConfig {
            choices_per_call: Some(2),
            ..cfg
        };
        let json = serde_json::to_value(ChatRequest::from_bundle(&bundle, &cfg)).unwrap();
        assert_eq!(json["n"], 2);
    }

    #[test]
    fn mock_reads_cell_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("F22__none.txt"), "1. x").unwrap();
        let mock = MockChatBackend::new(dir.path());
        let cell = CellKey::new("F22".parse().unwrap(), None);
        let bundle = PromptBundle {
            system_prompt: String::new(),
            user_prompt: String::new(),
            temperature: 0.0,
            n_requested: 1,
        };
        let cfg = GenerationConfig::default();
        assert_eq!(mock.complete(&bundle, &cell, &cfg, 0).unwrap(), vec!["1. x"]);
        let missing = CellKey::new("F1".parse().unwrap(), Some("women"));
        assert!(matches!(
            mock.complete(&bundle, &missing, &cfg, 0),
            Err(GenerationError::MockMissing { .. })
        ));
    }
}
