//! Tokenizer providers.
//!
//! Token counts drive ISL bucketing and, on endpoints that do not report
//! per-chunk counts, client-side step accounting. Two providers ship without
//! external assets (bytes and whitespace words); a byte-pair provider can be
//! loaded from a tiktoken-format rank file such as `o200k_base.tiktoken`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use base64::Engine;
use indexmap::IndexSet;
use regex::Regex;

use super::DatasetError;

pub type TokenId = u32;

/// Text <-> token-id mapping used throughout the toolkit.
///
/// Implementations must be deterministic: equal text always encodes to the
/// same ids.
pub trait TokenizerProvider: Send + Sync {
    fn tokenizer_id(&self) -> &str;
    fn encode(&self, text: &str) -> Vec<TokenId>;
    fn decode(&self, ids: &[TokenId]) -> String;

    fn count(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

/// One byte, one token. Ids are the byte values.
#[derive(Debug, Default, Clone, Copy)]
pub struct ByteTokenizer;

impl ByteTokenizer {
    pub const ID: &'static str = "bytes";
}

impl TokenizerProvider for ByteTokenizer {
    fn tokenizer_id(&self) -> &str {
        Self::ID
    }

    fn encode(&self, text: &str) -> Vec<TokenId> {
        text.bytes().map(TokenId::from).collect()
    }

    /// Invalid sequences in the middle decode lossily; an incomplete UTF-8
    /// sequence at the very end (a truncation artifact) is dropped.
    fn decode(&self, ids: &[TokenId]) -> String {
        let bytes: Vec<u8> = ids.iter().filter(|&&t| t < 256).map(|&t| t as u8).collect();
        let mut out = String::with_capacity(bytes.len());
        let mut chunks = bytes.utf8_chunks().peekable();
        while let Some(chunk) = chunks.next() {
            out.push_str(chunk.valid());
            let invalid = chunk.invalid();
            let incomplete_tail = chunks.peek().is_none()
                && matches!(std::str::from_utf8(invalid), Err(e) if e.error_len().is_none());
            if !invalid.is_empty() && !incomplete_tail {
                out.push(char::REPLACEMENT_CHARACTER);
            }
        }
        out
    }
}

/// Whitespace-delimited words. Ids are assigned on first sight by a shared
/// interner, so they are stable for the life of the tokenizer instance.
/// Decoding joins words with a single space.
#[derive(Debug, Default)]
pub struct WhitespaceTokenizer {
    vocab: RwLock<IndexSet<String>>,
}

impl WhitespaceTokenizer {
    pub const ID: &'static str = "whitespace";

    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&self, word: &str) -> TokenId {
        if let Some(i) = self.vocab.read().expect("vocab lock").get_index_of(word) {
            return i as TokenId;
        }
        let mut vocab = self.vocab.write().expect("vocab lock");
        let (i, _) = vocab.insert_full(word.to_owned());
        i as TokenId
    }
}

impl TokenizerProvider for WhitespaceTokenizer {
    fn tokenizer_id(&self) -> &str {
        Self::ID
    }

    fn encode(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|w| self.intern(w)).collect()
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        let vocab = self.vocab.read().expect("vocab lock");
        let words: Vec<&str> = ids
            .iter()
            .filter_map(|&i| vocab.get_index(i as usize).map(String::as_str))
            .collect();
        words.join(" ")
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

// Pre-tokenizer split used by o200k-style vocabularies. The reference pattern
// ends in `\s+(?!\S)|\s+`; without look-around the trailing whitespace rule
// collapses to `\s+`, so a run of spaces before a word is kept as one piece.
const O200K_SPLIT: &str = concat!(
    r"[^\r\n\p{L}\p{N}]?[\p{Lu}\p{Lt}\p{Lm}\p{Lo}\p{M}]*[\p{Ll}\p{Lm}\p{Lo}\p{M}]+(?i:'s|'t|'re|'ve|'m|'ll|'d)?",
    r"|[^\r\n\p{L}\p{N}]?[\p{Lu}\p{Lt}\p{Lm}\p{Lo}\p{M}]+[\p{Ll}\p{Lm}\p{Lo}\p{M}]*(?i:'s|'t|'re|'ve|'m|'ll|'d)?",
    r"|\p{N}{1,3}",
    r"| ?[^\s\p{L}\p{N}]+[\r\n/]*",
    r"|\s*[\r\n]+",
    r"|\s+",
);

/// Byte-pair tokenizer driven by a tiktoken rank file (`<base64 token> <rank>`
/// per line).
#[derive(Debug)]
pub struct BpeTokenizer {
    id: String,
    ranks: HashMap<Vec<u8>, TokenId>,
    tokens: HashMap<TokenId, Vec<u8>>,
    split: Regex,
}

impl BpeTokenizer {
    pub fn from_tiktoken_file(id: impl Into<String>, path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tiktoken_str(id, &text)
    }

    pub fn from_tiktoken_str(id: impl Into<String>, text: &str) -> Result<Self, DatasetError> {
        let engine = base64::engine::general_purpose::STANDARD;
        let mut ranks = HashMap::new();
        let mut tokens = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| DatasetError::Parse {
                line: lineno + 1,
                message,
            };
            let (tok, rank) = line
                .split_once(' ')
                .ok_or_else(|| bad("expected `<base64> <rank>`".into()))?;
            let bytes = engine
                .decode(tok)
                .map_err(|e| bad(format!("bad base64 token: {e}")))?;
            let rank: TokenId = rank
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad rank: {e}")))?;
            ranks.insert(bytes.clone(), rank);
            tokens.insert(rank, bytes);
        }
        if let Some(b) = (0u8..=255).find(|b| !ranks.contains_key(&vec![*b])) {
            return Err(DatasetError::Tokenizer(format!(
                "rank file has no single-byte token for 0x{b:02x}"
            )));
        }
        Ok(Self {
            id: id.into(),
            ranks,
            tokens,
            split: Regex::new(O200K_SPLIT).expect("static pattern"),
        })
    }

    fn merge_piece(&self, piece: &[u8], out: &mut Vec<TokenId>) {
        if let Some(&r) = self.ranks.get(piece) {
            out.push(r);
            return;
        }
        let mut parts: Vec<Vec<u8>> = piece.iter().map(|b| vec![*b]).collect();
        loop {
            let mut best: Option<(usize, TokenId)> = None;
            for i in 0..parts.len().saturating_sub(1) {
                let mut joined = parts[i].clone();
                joined.extend_from_slice(&parts[i + 1]);
                if let Some(&r) = self.ranks.get(&joined) {
                    if best.is_none_or(|(_, br)| r < br) {
                        best = Some((i, r));
                    }
                }
            }
            let Some((i, _)) = best else { break };
            let next = parts.remove(i + 1);
            parts[i].extend_from_slice(&next);
        }
        out.extend(parts.iter().map(|p| self.ranks[p]));
    }
}

impl TokenizerProvider for BpeTokenizer {
    fn tokenizer_id(&self) -> &str {
        &self.id
    }

    fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for m in self.split.find_iter(text) {
            self.merge_piece(m.as_str().as_bytes(), &mut out);
        }
        out
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        let bytes: Vec<u8> = ids
            .iter()
            .filter_map(|i| self.tokens.get(i))
            .flatten()
            .copied()
            .collect();
        ByteTokenizer.decode(&bytes.iter().map(|&b| TokenId::from(b)).collect::<Vec<_>>())
    }
}

/// Resolve a tokenizer by id: `bytes`, `whitespace`, or `bpe:<path>` for a
/// tiktoken rank file.
pub fn tokenizer_by_id(id: &str) -> Result<Arc<dyn TokenizerProvider>, DatasetError> {
    match id {
        ByteTokenizer::ID | "byte" => Ok(Arc::new(ByteTokenizer)),
        WhitespaceTokenizer::ID => Ok(Arc::new(WhitespaceTokenizer::new())),
        other => match other.strip_prefix("bpe:") {
            Some(path) => Ok(Arc::new(BpeTokenizer::from_tiktoken_file(
                other,
                Path::new(path),
            )?)),
            None => Err(DatasetError::Tokenizer(format!(
                "unknown tokenizer `{other}` (expected bytes, whitespace or bpe:<file>)"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_ranks() -> String {
        let engine = base64::engine::general_purpose::STANDARD;
        let mut lines: Vec<String> = (0u16..256)
            .map(|b| format!("{} {}", engine.encode([b as u8]), b))
            .collect();
        for (i, tok) in ["he", "ll", "hell", "hello", " w", " wor"].iter().enumerate() {
            lines.push(format!("{} {}", engine.encode(tok.as_bytes()), 256 + i));
        }
        lines.join("\n")
    }

    #[test]
    fn bytes_round_trip() {
        let t = ByteTokenizer;
        let ids = t.encode("héllo");
        assert_eq!(ids.len(), 6);
        assert_eq!(t.decode(&ids), "héllo");
    }

    #[test]
    fn bytes_drop_truncated_codepoint() {
        let t = ByteTokenizer;
        let ids = t.encode("aé");
        assert_eq!(t.decode(&ids[..2]), "a");
    }

    #[test]
    fn whitespace_ids_are_stable() {
        let t = WhitespaceTokenizer::new();
        let a = t.encode("a b c a");
        assert_eq!(a, vec![0, 1, 2, 0]);
        assert_eq!(t.encode("c  b\n a"), vec![2, 1, 0]);
        assert_eq!(t.decode(&a), "a b c a");
    }

    #[test]
    fn bpe_merges_by_rank() {
        let t = BpeTokenizer::from_tiktoken_str("tiny", &tiny_ranks()).unwrap();
        let ids = t.encode("hello world");
        // "hello" is a whole-piece hit; " world" only merges " w" (no " wo")
        assert_eq!(ids[0], 259);
        assert_eq!(ids[1], 260);
        assert_eq!(ids.len(), 6);
        assert_eq!(t.decode(&ids), "hello world");
        let again = t.encode(&t.decode(&ids));
        assert_eq!(again, ids);
    }

    #[test]
    fn bpe_requires_byte_alphabet() {
        let err = BpeTokenizer::from_tiktoken_str("x", "aGk= 0").unwrap_err();
        assert!(matches!(err, DatasetError::Tokenizer(_)));
    }

    #[test]
    fn resolve_by_id() {
        assert_eq!(tokenizer_by_id("bytes").unwrap().tokenizer_id(), "bytes");
        assert!(tokenizer_by_id("o200k_base").is_err());
    }
}
