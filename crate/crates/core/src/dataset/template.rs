//! Client-side prompt rendering.
//!
//! The benchmark sends token ids rather than text so every engine sees the
//! same sequence; this module owns the text -> ids step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sample::{Role, Sample};
use super::tokenizer::{TokenId, TokenizerProvider};
use super::DatasetError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BosPolicy {
    Prepend(TokenId),
    #[default]
    Omit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoleWrapper {
    #[serde(default)]
    pub prefix: String,
    #[serde(default)]
    pub suffix: String,
}

/// Chat template: BOS policy plus per-role wrapping strings.
///
/// An empty `wrappers` map renders turn contents back to back. Once any
/// wrapper is declared, every role used by a sample must have one.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatTemplate {
    #[serde(default)]
    pub bos: BosPolicy,
    #[serde(default)]
    pub wrappers: BTreeMap<String, RoleWrapper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_prefix: Option<String>,
}

impl ChatTemplate {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with_wrapper(mut self, role: Role, prefix: &str, suffix: &str) -> Self {
        self.wrappers.insert(
            role.as_str().to_owned(),
            RoleWrapper {
                prefix: prefix.to_owned(),
                suffix: suffix.to_owned(),
            },
        );
        self
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        match self.wrappers.keys().find(|k| Role::parse(k).is_none()) {
            Some(bad) => Err(DatasetError::Template(format!("unknown role `{bad}`"))),
            None => Ok(()),
        }
    }

    /// Render the sample to the exact string that gets tokenized.
    pub fn render_text(&self, sample: &Sample) -> Result<String, DatasetError> {
        self.validate()?;
        let mut text = String::new();
        for turn in &sample.turns {
            if self.wrappers.is_empty() {
                text.push_str(&turn.content);
                continue;
            }
            let w = self.wrappers.get(turn.role.as_str()).ok_or_else(|| {
                DatasetError::Template(format!(
                    "template has no wrapper for role `{}`",
                    turn.role.as_str()
                ))
            })?;
            text.push_str(&w.prefix);
            text.push_str(&turn.content);
            text.push_str(&w.suffix);
        }
        if let Some(gen) = &self.generation_prefix {
            text.push_str(gen);
        }
        Ok(text)
    }
}

/// Render and tokenize a sample. BOS is prepended only if the encoded text
/// does not already start with it.
pub fn render_prompt(
    sample: &Sample,
    template: &ChatTemplate,
    tokenizer: &dyn TokenizerProvider,
) -> Result<Vec<TokenId>, DatasetError> {
    let text = template.render_text(sample)?;
    let mut ids = tokenizer.encode(&text);
    if let BosPolicy::Prepend(bos) = template.bos {
        if ids.first() != Some(&bos) {
            ids.insert(0, bos);
        }
    }
    Ok(ids)
}
