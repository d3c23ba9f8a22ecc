//! Fixed-ISL bucketing.
//!
//! Every prompt is brought to exactly `target_isl` tokens: long prompts are
//! truncated, short ones get the neutral suffix appended (token-level, cycled)
//! and trimmed. Multi-turn samples are flattened into a single user turn
//! first.

use serde_json::Value;

use super::sample::{Sample, Turn};
use super::tokenizer::{TokenId, TokenizerProvider};
use super::DatasetError;

pub const DEFAULT_PAD_SUFFIX: &str = "please answer now";
pub const DEFAULT_ISL_BUCKETS: [usize; 5] = [1024, 2048, 8192, 16384, 32768];

// decode/encode can disagree at a cut point (e.g. a split UTF-8 sequence), so
// the fit is re-checked a bounded number of times
const MAX_REFITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct BucketSpec {
    target_isl: usize,
    pad_suffix: String,
    tokenizer_id: String,
    suffix_ids: Vec<TokenId>,
}

impl BucketSpec {
    pub fn new(
        target_isl: usize,
        pad_suffix: impl Into<String>,
        tokenizer: &dyn TokenizerProvider,
    ) -> Result<Self, DatasetError> {
        let pad_suffix = pad_suffix.into();
        let suffix_ids = tokenizer.encode(&pad_suffix);
        if suffix_ids.is_empty() {
            return Err(DatasetError::InvalidBucket(format!(
                "pad suffix {pad_suffix:?} tokenizes to zero tokens"
            )));
        }
        if target_isl <= suffix_ids.len() {
            return Err(DatasetError::InvalidBucket(format!(
                "target ISL {target_isl} must exceed the suffix length ({} tokens)",
                suffix_ids.len()
            )));
        }
        Ok(Self {
            target_isl,
            pad_suffix,
            tokenizer_id: tokenizer.tokenizer_id().to_owned(),
            suffix_ids,
        })
    }

    pub fn with_default_suffix(
        target_isl: usize,
        tokenizer: &dyn TokenizerProvider,
    ) -> Result<Self, DatasetError> {
        Self::new(target_isl, DEFAULT_PAD_SUFFIX, tokenizer)
    }

    pub fn target_isl(&self) -> usize {
        self.target_isl
    }

    pub fn pad_suffix(&self) -> &str {
        &self.pad_suffix
    }

    pub fn tokenizer_id(&self) -> &str {
        &self.tokenizer_id
    }

    pub fn bucket_id(&self) -> String {
        format!("isl_{}", self.target_isl)
    }

    /// Bring `ids` to exactly the target length at the token level.
    pub fn fit_ids(&self, ids: &[TokenId]) -> Vec<TokenId> {
        let target = self.target_isl;
        if ids.len() >= target {
            return ids[..target].to_vec();
        }
        let mut out = Vec::with_capacity(target);
        out.extend_from_slice(ids);
        out.extend(self.suffix_ids.iter().cycle().take(target - ids.len()));
        out
    }
}

/// Fit a sample's prompt to the bucket length.
///
/// The returned sample has a single user turn whose text encodes to exactly
/// `spec.target_isl()` tokens under `tokenizer`, and carries `isl` and
/// `bucket_id` fields.
pub fn fit_to_isl(
    sample: &Sample,
    spec: &BucketSpec,
    tokenizer: &dyn TokenizerProvider,
) -> Result<Sample, DatasetError> {
    if sample.user_turns() == 0 {
        return Err(DatasetError::NoUserTurn {
            id: sample.id.clone(),
        });
    }
    let target = spec.target_isl();
    let original = sample.flattened_text();
    let mut ids = tokenizer.encode(&original);

    let text = if ids.len() == target && sample.turns.len() == 1 {
        original
    } else {
        let mut text = original;
        let mut converged = false;
        for _ in 0..MAX_REFITS {
            if ids.len() == target {
                converged = true;
                break;
            }
            text = tokenizer.decode(&spec.fit_ids(&ids));
            ids = tokenizer.encode(&text);
        }
        if !converged && ids.len() != target {
            return Err(DatasetError::FitDiverged {
                id: sample.id.clone(),
                target,
                got: ids.len(),
            });
        }
        text
    };

    let mut out = sample.clone();
    out.turns = vec![Turn::user(text)];
    out.multiturn = false;
    out.extra.insert("isl".into(), Value::from(target));
    out.extra.insert("bucket_id".into(), Value::from(spec.bucket_id()));
    Ok(out)
}
