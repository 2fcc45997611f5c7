//! Records, JSON Lines ingestion, and the text analyzer shared by every engine.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intbitset::RecordId;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: duplicate record id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("line {line}: record id must be positive, got {id}")]
    NonPositiveId { line: usize, id: i64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Indexed metadata fields. Every field index and weight is keyed by one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldName {
    Title,
    Abstract,
    Author,
    Keyword,
    Fulltext,
}

impl FieldName {
    /// Fixed iteration order; score aggregation always sums in this order.
    pub const ALL: [FieldName; 5] = [
        FieldName::Title,
        FieldName::Abstract,
        FieldName::Author,
        FieldName::Keyword,
        FieldName::Fulltext,
    ];

    /// Fields used for record similarity unless configured otherwise.
    pub const MLT_DEFAULT: [FieldName; 4] = [
        FieldName::Abstract,
        FieldName::Author,
        FieldName::Keyword,
        FieldName::Title,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldName::Title => "title",
            FieldName::Abstract => "abstract",
            FieldName::Author => "author",
            FieldName::Keyword => "keyword",
            FieldName::Fulltext => "fulltext",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FieldName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown field {0:?}")]
pub struct UnknownField(pub String);

impl FromStr for FieldName {
    type Err = UnknownField;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "title" => Ok(FieldName::Title),
            "abstract" => Ok(FieldName::Abstract),
            "author" | "authors" => Ok(FieldName::Author),
            "keyword" | "keywords" => Ok(FieldName::Keyword),
            "fulltext" => Ok(FieldName::Fulltext),
            other => Err(UnknownField(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: RecordId,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub fulltext: String,
}

impl Record {
    pub fn new(id: RecordId) -> Self {
        Record {
            id,
            title: String::new(),
            abstract_text: String::new(),
            authors: Vec::new(),
            keywords: Vec::new(),
            fulltext: String::new(),
        }
    }

    /// Text of one field. List fields are joined with a single space so each
    /// is analyzed as one token stream.
    pub fn field_text(&self, field: FieldName) -> Cow<'_, str> {
        match field {
            FieldName::Title => Cow::Borrowed(&self.title),
            FieldName::Abstract => Cow::Borrowed(&self.abstract_text),
            FieldName::Author => Cow::Owned(self.authors.join(" ")),
            FieldName::Keyword => Cow::Owned(self.keywords.join(" ")),
            FieldName::Fulltext => Cow::Borrowed(&self.fulltext),
        }
    }

    pub fn field_tokens(&self, field: FieldName) -> Vec<Token> {
        analyze(&self.field_text(field))
    }
}

// Wire shape used only for validation; ids arrive as arbitrary JSON integers.
#[derive(Deserialize)]
struct RawRecord {
    id: serde_json::Number,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: String,
    #[serde(default)]
    authors: Vec<String>,
    #[serde(default)]
    keywords: Vec<String>,
    #[serde(default)]
    fulltext: String,
}

/// Reads a JSON Lines corpus. Blank lines are skipped; line numbers are 1-based.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<Record>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let id = match (raw.id.as_i64(), raw.id.as_u64()) {
            (Some(v), _) if v <= 0 => return Err(CorpusError::NonPositiveId { line: line_no, id: v }),
            (_, Some(v)) if v <= RecordId::MAX as u64 => v as RecordId,
            _ => {
                return Err(CorpusError::MalformedLine {
                    line: line_no,
                    message: format!("id {} is not a 32-bit positive integer", raw.id),
                })
            }
        };
        if !seen.insert(id) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: id as u64,
            });
        }
        records.push(Record {
            id,
            title: raw.title,
            abstract_text: raw.abstract_text,
            authors: raw.authors,
            keywords: raw.keywords,
            fulltext: raw.fulltext,
        });
    }
    Ok(records)
}

pub fn parse_jsonl_str(text: &str) -> Result<Vec<Record>, CorpusError> {
    parse_jsonl(text.as_bytes())
}

pub fn write_jsonl<W: Write>(mut writer: W, records: &[Record]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub term: String,
    pub position: u32,
}

/// Splits `text` into lowercase terms made of maximal alphanumeric runs.
/// No stemming and no stopwords.
pub fn analyze(text: &str) -> Vec<Token> {
    analyze_terms(text)
        .into_iter()
        .enumerate()
        .map(|(position, term)| Token {
            term,
            position: position as u32,
        })
        .collect()
}

/// Same as [`analyze`] without positions.
pub fn analyze_terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| !run.is_empty())
        .filter_map(|run| {
            // Lowercasing can emit combining marks (e.g. U+0130); drop them so
            // every term re-analyzes to itself.
            let term: String = run
                .chars()
                .flat_map(char::to_lowercase)
                .filter(|c| c.is_alphanumeric())
                .collect();
            (!term.is_empty()).then_some(term)
        })
        .collect()
}
