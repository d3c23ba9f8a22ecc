use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::dataset::{render_prompt, ChatTemplate, Sample, TokenId, TokenizerProvider};

/// One prompt ready for dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadItem {
    pub sample_id: String,
    pub prompt_token_ids: Vec<TokenId>,
    /// Prompt text for endpoints that are not sent token ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    /// Category tag forwarded to the server as `x-prompt-tag`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl WorkloadItem {
    pub fn from_ids(sample_id: impl Into<String>, ids: Vec<TokenId>) -> Self {
        Self {
            sample_id: sample_id.into(),
            prompt_token_ids: ids,
            prompt: None,
            tag: None,
        }
    }

    pub fn from_sample(
        sample: &Sample,
        template: &ChatTemplate,
        tokenizer: &dyn TokenizerProvider,
    ) -> Result<Self, BenchError> {
        let ids = render_prompt(sample, template, tokenizer)
            .map_err(|e| BenchError::Workload(format!("sample `{}`: {e}", sample.id)))?;
        let text = template
            .render_text(sample)
            .map_err(|e| BenchError::Workload(e.to_string()))?;
        Ok(Self {
            sample_id: sample.id.clone(),
            prompt_token_ids: ids,
            prompt: Some(text),
            tag: Some(sample.category.clone()),
        })
    }
}

#[derive(Deserialize)]
struct PretokenizedRecord {
    #[serde(alias = "sample_id")]
    id: String,
    prompt_token_ids: Vec<TokenId>,
    #[serde(default)]
    prompt: Option<String>,
    #[serde(default, alias = "category")]
    tag: Option<String>,
}

/// Read a JSONL workload. Records with `prompt_token_ids` are used as is;
/// anything else must be a sample record and is rendered with `tokenizer`.
pub fn load_workload(
    path: &Path,
    template: &ChatTemplate,
    tokenizer: &dyn TokenizerProvider,
) -> Result<Vec<WorkloadItem>, BenchError> {
    let file =
        std::fs::File::open(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BenchError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| BenchError::Workload(format!("line {}: {e}", i + 1)))?;
        let at_line = |e: serde_json::Error| BenchError::Workload(format!("line {}: {e}", i + 1));
        if value.get("prompt_token_ids").is_some() {
            let r: PretokenizedRecord = serde_json::from_value(value).map_err(at_line)?;
            if r.prompt_token_ids.is_empty() {
                return Err(BenchError::Workload(format!("line {}: empty prompt", i + 1)));
            }
            out.push(WorkloadItem {
                sample_id: r.id,
                prompt_token_ids: r.prompt_token_ids,
                prompt: r.prompt,
                tag: r.tag,
            });
        } else {
            let s: Sample = serde_json::from_value(value).map_err(at_line)?;
            out.push(WorkloadItem::from_sample(&s, template, tokenizer)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ByteTokenizer;

    #[test]
    fn mixed_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"id\":\"p1\",\"prompt_token_ids\":[1,2,3]}\n",
                "{\"id\":\"s1\",\"category\":\"low_entropy\",\"turns\":[{\"role\":\"user\",\"content\":\"hi\"}],\"multiturn\":false,\"source\":\"x\"}\n",
            ),
        )
        .unwrap();
        let w = load_workload(&path, &ChatTemplate::identity(), &ByteTokenizer).unwrap();
        assert_eq!(w[0].prompt_token_ids, vec![1, 2, 3]);
        assert_eq!(w[1].prompt_token_ids, vec![104, 105]);
        assert_eq!(w[1].tag.as_deref(), Some("low_entropy"));
    }

    #[test]
    fn empty_prompt_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.jsonl");
        std::fs::write(&path, "{\"id\":\"p\",\"prompt_token_ids\":[]}\n").unwrap();
        assert!(load_workload(&path, &ChatTemplate::identity(), &ByteTokenizer).is_err());
    }
}
