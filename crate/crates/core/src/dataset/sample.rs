use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "system" => Some(Role::System),
            "user" => Some(Role::User),
            "assistant" => Some(Role::Assistant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub content: String,
}

impl Turn {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

/// One benchmark prompt.
///
/// Fields not known to this struct are kept in `extra` and written back out
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
    pub turns: Vec<Turn>,
    pub multiturn: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    pub source: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Sample {
    /// Single-turn sample with empty metadata.
    pub fn single_turn(id: impl Into<String>, category: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            category: category.into(),
            subcategory: None,
            turns: vec![Turn::user(prompt)],
            multiturn: false,
            difficulty: None,
            source: String::new(),
            extra: Map::new(),
        }
    }

    pub fn user_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.role == Role::User).count()
    }

    /// All turn contents concatenated in order, separated by newlines.
    pub fn flattened_text(&self) -> String {
        let parts: Vec<&str> = self.turns.iter().map(|t| t.content.as_str()).collect();
        parts.join("\n")
    }

    /// Check the record-level invariants. On failure returns the offending
    /// field name and a description.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.id.is_empty() {
            return Err(("id", "must be non-empty".into()));
        }
        if self.category.is_empty() {
            return Err(("category", "must be non-empty".into()));
        }
        if self.turns.is_empty() {
            return Err(("turns", "must contain at least one turn".into()));
        }
        if let Some(i) = self.turns.iter().position(|t| t.content.is_empty()) {
            return Err(("turns", format!("turn {i} has empty content")));
        }
        let body = match self.turns.first().map(|t| t.role) {
            Some(Role::System) => &self.turns[1..],
            _ => &self.turns[..],
        };
        for (i, turn) in body.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if turn.role != expected {
                return Err((
                    "turns",
                    format!(
                        "expected {} turn at position {}, found {}",
                        expected.as_str(),
                        i + (self.turns.len() - body.len()),
                        turn.role.as_str()
                    ),
                ));
            }
        }
        let expect_multi = self.user_turns() > 1;
        if self.multiturn != expect_multi {
            return Err((
                "multiturn",
                format!(
                    "is {} but sample has {} user turns",
                    self.multiturn,
                    self.user_turns()
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    #[default]
    Jsonl,
}

/// Read a sample file, validating every record and rejecting duplicate ids.
pub fn load_samples(path: &Path, format: SampleFormat) -> Result<Vec<Sample>, DatasetError> {
    let SampleFormat::Jsonl = format;
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_samples(BufReader::new(file))
}

pub fn parse_samples(reader: impl BufRead) -> Result<Vec<Sample>, DatasetError> {
    let mut samples = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| DatasetError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if let Err((field, message)) = sample.validate() {
            return Err(DatasetError::Invariant {
                line: lineno,
                id: sample.id,
                field,
                message,
            });
        }
        if let Some(&first_line) = seen.get(&sample.id) {
            return Err(DatasetError::DuplicateId {
                id: sample.id,
                first_line,
                second_line: lineno,
            });
        }
        seen.insert(sample.id.clone(), lineno);
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for s in samples {
        let line = serde_json::to_string(s).expect("sample serializes");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Count samples per category, in first-seen order.
pub fn category_histogram(samples: &[Sample]) -> indexmap::IndexMap<String, usize> {
    let mut hist = indexmap::IndexMap::new();
    for s in samples {
        *hist.entry(s.category.clone()).or_insert(0) += 1;
    }
    hist
}
