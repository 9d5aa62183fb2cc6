//! Prompt factory: wraps an instantiated instruction segment (and optional
//! demonstration) in a fixed skeleton and pairs it with the system prompt.

use serde::{Deserialize, Serialize};

use crate::generation::GenerationConfig;
use crate::registry::{self, Functionality, TargetGroup, TemplateError};
use crate::Real;

/// Research-context preamble sent as the system message.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a crowd-sourced worker who composes messages for a hate speech research project. Write messages with diverse styles and lengths.";

/// Text around the instruction segment. `{n}`, `{instruction}` and
/// `{demonstration}` are substituted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSkeleton {
    pub system_prompt: String,
    pub instruction: String,
    pub demonstration: String,
    pub response_format: String,
}

impl Default for PromptSkeleton {
    fn default() -> Self {
        Self {
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            instruction: "Write {n} messages that {instruction}".to_string(),
            demonstration: "Example: {demonstration}".to_string(),
            response_format:
                "Return the messages as a numbered list (1., 2., 3., ...) with one message per item."
                    .to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: Real,
    pub n_requested: usize,
}

impl PromptSkeleton {
    /// Builds the chat prompt for one (functionality, group) cell.
    ///
    /// Deterministic. The demonstration, when the functionality has one, is
    /// instantiated with the same group as the instruction.
    pub fn build(
        &self,
        f: &Functionality,
        group: Option<&TargetGroup>,
        cfg: &GenerationConfig,
    ) -> Result<PromptBundle, TemplateError> {
        let instruction = registry::instantiate_instruction(f, group)?;
        let mut sections = vec![self
            .instruction
            .replace("{n}", &cfg.n_requested.to_string())
            .replace("{instruction}", &instruction)];
        if let Some(demo) = &f.demonstration {
            let demo = registry::fill_masks(demo, group)?;
            sections.push(self.demonstration.replace("{demonstration}", &demo));
        }
        sections.push(self.response_format.replace("{n}", &cfg.n_requested.to_string()));
        Ok(PromptBundle {
            system_prompt: self.system_prompt.clone(),
            user_prompt: sections.join("\n"),
            temperature: cfg.temperature,
            n_requested: cfg.n_requested,
        })
    }
}

/// [`PromptSkeleton::build`] with the default skeleton.
pub fn build_prompt(
    f: &Functionality,
    group: Option<&TargetGroup>,
    cfg: &GenerationConfig,
) -> Result<PromptBundle, TemplateError> {
    PromptSkeleton::default().build(f, group, cfg)
}
