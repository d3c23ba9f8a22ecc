//! Server-sent-event framing and per-chunk token counting.

use serde_json::Value;

use super::BenchError;
use crate::dataset::TokenizerProvider;

/// What one streamed event contributed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedChunk {
    pub new_tokens: u32,
    pub is_final: bool,
    /// `usage.completion_tokens` when the event carried it.
    pub reported_completion_tokens: Option<u64>,
    pub finish_reason: Option<String>,
}

/// Splits a byte stream into complete events (text between blank lines).
#[derive(Debug, Default)]
pub struct SseSplitter {
    buf: Vec<u8>,
}

impl SseSplitter {
    pub fn push(&mut self, bytes: &[u8]) -> Vec<String> {
        self.buf.extend(bytes.iter().copied().filter(|&b| b != b'\r'));
        let mut events = Vec::new();
        while let Some(pos) = self.buf.windows(2).position(|w| w == b"\n\n") {
            let raw: Vec<u8> = self.buf.drain(..pos + 2).collect();
            events.push(String::from_utf8_lossy(&raw[..pos]).into_owned());
        }
        events
    }

    /// Bytes received after the last complete event.
    pub fn remainder(&self) -> &[u8] {
        &self.buf
    }
}

/// Stateful parser: engines that report a running `usage.completion_tokens`
/// on every chunk are converted to per-chunk deltas.
pub struct ChunkParser<'a> {
    tokenizer: Option<&'a dyn TokenizerProvider>,
    cumulative: u64,
}

impl<'a> ChunkParser<'a> {
    pub fn new(tokenizer: Option<&'a dyn TokenizerProvider>) -> Self {
        Self {
            tokenizer,
            cumulative: 0,
        }
    }

    pub fn parse(&mut self, raw: &str) -> Result<ParsedChunk, BenchError> {
        let data: Vec<&str> = raw
            .lines()
            .filter_map(|l| l.strip_prefix("data:"))
            .map(|d| d.strip_prefix(' ').unwrap_or(d))
            .collect();
        if data.is_empty() {
            // comment-only event: a keep-alive
            return Ok(ParsedChunk::default());
        }
        let payload = data.join("\n");
        if payload.trim() == "[DONE]" {
            return Ok(ParsedChunk {
                is_final: true,
                ..Default::default()
            });
        }
        let v: Value = serde_json::from_str(&payload)
            .map_err(|e| BenchError::Stream(format!("malformed event `{payload}`: {e}")))?;
        if let Some(err) = v.get("error") {
            return Err(BenchError::Stream(format!("endpoint error: {err}")));
        }
        let usage = v
            .get("usage")
            .and_then(|u| u.get("completion_tokens"))
            .and_then(Value::as_u64);
        let choice = v
            .get("choices")
            .and_then(Value::as_array)
            .and_then(|c| c.first());
        let mut out = ParsedChunk {
            reported_completion_tokens: usage,
            ..Default::default()
        };
        if let Some(c) = choice {
            out.finish_reason = c
                .get("finish_reason")
                .and_then(Value::as_str)
                .map(str::to_owned);
            let n = if let Some(ids) = c.get("token_ids").and_then(Value::as_array) {
                ids.len() as u64
            } else if let Some(total) = usage {
                total.saturating_sub(self.cumulative)
            } else {
                let text = c
                    .get("text")
                    .or_else(|| c.get("delta").and_then(|d| d.get("content")))
                    .and_then(Value::as_str)
                    .unwrap_or("");
                if text.is_empty() {
                    0
                } else {
                    let tok = self.tokenizer.ok_or_else(|| {
                        BenchError::Stream("chunk has no token count and no tokenizer is set".into())
                    })?;
                    tok.count(text) as u64
                }
            };
            out.new_tokens = u32::try_from(n)
                .map_err(|_| BenchError::Stream(format!("implausible chunk size {n}")))?;
        }
        if let Some(total) = usage {
            self.cumulative = total;
        }
        Ok(out)
    }
}

/// Parse a single event without any stream context.
pub fn parse_stream_chunk(
    raw: &str,
    tokenizer: Option<&dyn TokenizerProvider>,
) -> Result<ParsedChunk, BenchError> {
    ChunkParser::new(tokenizer).parse(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::WhitespaceTokenizer;

    #[test]
    fn done_sentinel() {
        let p = parse_stream_chunk("data: [DONE]", None).unwrap();
        assert_eq!((p.new_tokens, p.is_final), (0, true));
    }

    #[test]
    fn usage_field_counts() {
        let raw = r#"data: {"choices":[{"index":0,"text":"xyz"}],"usage":{"completion_tokens":3}}"#;
        let p = parse_stream_chunk(raw, None).unwrap();
        assert_eq!((p.new_tokens, p.is_final), (3, false));
    }

    #[test]
    fn running_usage_becomes_deltas() {
        let mut parser = ChunkParser::new(None);
        let ev = |n: u64| format!(r#"data: {{"choices":[{{"text":"."}}],"usage":{{"completion_tokens":{n}}}}}"#);
        assert_eq!(parser.parse(&ev(3)).unwrap().new_tokens, 3);
        assert_eq!(parser.parse(&ev(7)).unwrap().new_tokens, 4);
        assert_eq!(parser.parse(&ev(8)).unwrap().new_tokens, 1);
    }

    #[test]
    fn token_ids_field_counts() {
        let raw = r#"data: {"choices":[{"text":"a","token_ids":[5,6,7,8]}]}"#;
        assert_eq!(parse_stream_chunk(raw, None).unwrap().new_tokens, 4);
    }

    #[test]
    fn tokenizer_fallback_for_text_and_chat() {
        let ws = WhitespaceTokenizer::new();
        let raw = r#"data: {"choices":[{"text":"a b c"}]}"#;
        assert_eq!(parse_stream_chunk(raw, Some(&ws)).unwrap().new_tokens, 3);
        let raw = r#"data: {"choices":[{"delta":{"content":"a b"}}]}"#;
        assert_eq!(parse_stream_chunk(raw, Some(&ws)).unwrap().new_tokens, 2);
        assert!(parse_stream_chunk(r#"data: {"choices":[{"text":"a"}]}"#, None).is_err());
    }

    #[test]
    fn keepalives_and_usage_only_chunks() {
        assert_eq!(parse_stream_chunk(": ping", None).unwrap(), ParsedChunk::default());
        let raw = r#"data: {"choices":[{"text":""}]}"#;
        assert_eq!(parse_stream_chunk(raw, None).unwrap().new_tokens, 0);
        let raw = r#"data: {"choices":[],"usage":{"completion_tokens":42}}"#;
        let p = parse_stream_chunk(raw, None).unwrap();
        assert_eq!((p.new_tokens, p.reported_completion_tokens), (0, Some(42)));
    }

    #[test]
    fn malformed_and_error_events() {
        assert!(parse_stream_chunk("data: {nope", None).is_err());
        assert!(parse_stream_chunk(r#"data: {"error":{"message":"x"}}"#, None).is_err());
    }

    #[test]
    fn finish_reason_is_kept() {
        let raw = r#"data: {"choices":[{"token_ids":[1],"finish_reason":"length"}]}"#;
        assert_eq!(parse_stream_chunk(raw, None).unwrap().finish_reason.as_deref(), Some("length"));
    }

    #[test]
    fn splitter_handles_partial_reads() {
        let mut s = SseSplitter::default();
        assert!(s.push(b"data: {\"a\"").is_empty());
        assert_eq!(s.push(b":1}\r\n\r\ndata: [DONE]\n"), vec!["data: {\"a\":1}".to_string()]);
        assert_eq!(s.push(b"\n"), vec!["data: [DONE]".to_string()]);
        assert!(s.remainder().is_empty());
    }
}
