//! Diversity-maximizing subset selection over prompt embeddings.
//!
//! The objective is the total pairwise cosine similarity of the chosen set
//! (ordered pairs). [`select_diverse`] runs greedy construction followed by
//! best-improvement swaps; [`qp_select`] solves a convex relaxation instead.

mod embed_client;
mod embedding;
mod objective;
mod qp;
mod select;

use std::path::PathBuf;

pub use embed_client::{fetch_embeddings, fetch_embeddings_with_ids, EmbeddingCache, EmbeddingsProvider};
pub use embedding::{normalize_rows, EmbeddingSet};
pub use objective::{
    mean_pairwise_similarity, pairwise_objective, similarity_matrix, write_similarity_csv,
};
pub use qp::{project_capped_simplex, qp_select, QpState, DEFAULT_QP_ITERS};
pub use select::{
    bruteforce_select, greedy_select, greedy_select_restarts, random_select, select_diverse,
    swap_refine, Method, Selection, DEFAULT_MAX_ITER, SWAP_TOLERANCE,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("empty embedding set")]
    Empty,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("{0}")]
    Shape(String),
    #[error("row {row} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("index {index} out of range for {n} rows")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("index {0} appears more than once")]
    RepeatedIndex(usize),
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("mean similarity needs at least 2 items, got {0}")]
    TooFewForSimilarity(usize),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("embeddings endpoint: {0}")]
    Endpoint(String),
}

/// Serialized selection result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub ids: Vec<String>,
    pub objective: f64,
    pub mean_similarity: Option<f64>,
}

impl SelectionRecord {
    pub fn new(emb: &EmbeddingSet, sel: &Selection, seed: u64, category: Option<String>) -> Self {
        Self {
            category,
            method: sel.method,
            k: sel.indices.len(),
            seed,
            indices: sel.indices.clone(),
            ids: sel.ids(emb).into_iter().map(str::to_owned).collect(),
            objective: sel.objective,
            mean_similarity: mean_pairwise_similarity(emb, &sel.indices).ok(),
        }
    }
}
