//! Sample schema, tokenizers, fixed-ISL bucketing and prompt rendering.

mod bucket;
mod sample;
mod template;
mod tokenizer;

use std::path::PathBuf;

pub use bucket::{fit_to_isl, BucketSpec, DEFAULT_ISL_BUCKETS, DEFAULT_PAD_SUFFIX};
pub use sample::{
    category_histogram, load_samples, parse_samples, write_samples, Difficulty, Role, Sample,
    SampleFormat, Turn,
};
pub use template::{render_prompt, BosPolicy, ChatTemplate, RoleWrapper};
pub use tokenizer::{
    tokenizer_by_id, BpeTokenizer, ByteTokenizer, TokenId, TokenizerProvider, WhitespaceTokenizer,
};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate sample id `{id}` on lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("line {line}: sample `{id}` field `{field}` {message}")]
    Invariant {
        line: usize,
        id: String,
        field: &'static str,
        message: String,
    },
    #[error("invalid bucket: {0}")]
    InvalidBucket(String),
    #[error("sample `{id}` has no user turn")]
    NoUserTurn { id: String },
    #[error("sample `{id}`: could not fit to {target} tokens (stuck at {got})")]
    FitDiverged { id: String, target: usize, got: usize },
    #[error("template: {0}")]
    Template(String),
    #[error("tokenizer: {0}")]
    Tokenizer(String),
}
