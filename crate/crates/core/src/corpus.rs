//! Corpus ingestion and the abstract preprocessing pipeline.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Year → citation count.
pub type Citations = BTreeMap<i32, u64>;

/// One line of the input corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub doi: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub pub_year: i32,
    #[serde(default, deserialize_with = "citations_de")]
    pub citations: Citations,
}

/// A preprocessed abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doi: String,
    pub tokens: Vec<String>,
    pub pub_year: i32,
    #[serde(default, deserialize_with = "citations_de")]
    pub citations: Citations,
}

/// Reads year keys from JSON strings. Needed because flattened structs are
/// buffered and lose serde_json's integer-key coercion.
fn citations_de<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Citations, D::Error> {
    let raw = BTreeMap::<String, u64>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<i32>()
                .map(|y| (y, v))
                .map_err(|_| serde::de::Error::custom(format!("citation year {k:?} is not an integer")))
        })
        .collect()
}

impl Document {
    /// Citations received in `year`; missing entries count as zero.
    pub fn citations_in(&self, year: i32) -> u64 {
        self.citations.get(&year).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.tokens.iter().any(|t| t == word)
    }

    /// Distinct tokens in first-occurrence order.
    pub fn distinct_tokens(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.tokens
            .iter()
            .map(String::as_str)
            .filter(|t| seen.insert(*t))
            .collect()
    }

    /// Copy of the document with every occurrence of the given words removed.
    pub fn without_words(&self, removed: &HashSet<&str>) -> Document {
        Document {
            doi: self.doi.clone(),
            tokens: self
                .tokens
                .iter()
                .filter(|t| !removed.contains(t.as_str()))
                .cloned()
                .collect(),
            pub_year: self.pub_year,
            citations: self.citations.clone(),
        }
    }
}

impl AsRef<Document> for Document {
    fn as_ref(&self) -> &Document {
        self
    }
}

pub type LanguageFilter = Arc<dyn Fn(&str) -> bool + Send + Sync>;
pub type Normalizer = Arc<dyn Fn(&str) -> String + Send + Sync>;

#[derive(Clone)]
pub struct PipelineConfig {
    /// Abstracts with at most this many characters are dropped.
    pub min_raw_chars: usize,
    /// Cleaned abstracts shorter than this are dropped.
    pub min_clean_chars: usize,
    pub language_filter: LanguageFilter,
    /// Applied to each token after lowercasing. The default is identity;
    /// plug a lemmatizer in here.
    pub normalizer: Normalizer,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_raw_chars: 10,
            min_clean_chars: 20,
            language_filter: Arc::new(|_| true),
            normalizer: Arc::new(|t| t.to_string()),
        }
    }
}

impl fmt::Debug for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PipelineConfig")
            .field("min_raw_chars", &self.min_raw_chars)
            .field("min_clean_chars", &self.min_clean_chars)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    TooShortRaw,
    Language,
    TooShortClean,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rejection::TooShortRaw => "too_short_raw",
            Rejection::Language => "language",
            Rejection::TooShortClean => "too_short_clean",
        };
        f.write_str(s)
    }
}

/// Loads a JSON-lines corpus. Records repeating an earlier doi are dropped
/// with a warning.
pub fn ingest(path: &Path) -> Result<Vec<RawRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, path)
}

pub fn parse_records(text: &str, path: &Path) -> Result<Vec<RawRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let record: RawRecord =
            serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if record.doi.trim().is_empty() {
            return Err(parse_err("empty doi".into()));
        }
        if !(1900..=2100).contains(&record.pub_year) {
            return Err(parse_err(format!(
                "pub_year {} outside [1900, 2100]",
                record.pub_year
            )));
        }
        if !seen.insert(record.doi.clone()) {
            log::warn!(
                "{}:{}: duplicate doi {:?} skipped",
                path.display(),
                idx + 1,
                record.doi
            );
            continue;
        }
        out.push(record);
    }
    Ok(out)
}

fn is_kept_char(c: char) -> bool {
    c.is_alphanumeric() || c.is_whitespace() || c == '-' || c == '/'
}

fn is_number(token: &str) -> bool {
    let digits = token.trim_start_matches(['-', '+']);
    !digits.is_empty() && digits.chars().all(|c| c.is_numeric())
}

/// Strips punctuation (keeping `-` and `/`), lowercases, splits on
/// whitespace, drops standalone numbers and applies the normalizer.
pub fn tokenize(text: &str, cfg: &PipelineConfig) -> Vec<String> {
    let cleaned: String = text.chars().filter(|&c| is_kept_char(c)).collect();
    cleaned
        .to_lowercase()
        .split_whitespace()
        .filter(|t| t.chars().any(char::is_alphanumeric) && !is_number(t))
        .flat_map(|t| {
            (cfg.normalizer)(t)
                .split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Runs the preprocessing pipeline on one record.
pub fn preprocess(record: &RawRecord, cfg: &PipelineConfig) -> Result<Document, Rejection> {
    if record.abstract_text.chars().count() <= cfg.min_raw_chars {
        return Err(Rejection::TooShortRaw);
    }
    if !(cfg.language_filter)(&record.abstract_text) {
        return Err(Rejection::Language);
    }
    let tokens = tokenize(&record.abstract_text, cfg);
    let clean_len = detokenize(&tokens).chars().count();
    if tokens.is_empty() || clean_len < cfg.min_clean_chars {
        return Err(Rejection::TooShortClean);
    }
    Ok(Document {
        doi: record.doi.clone(),
        tokens,
        pub_year: record.pub_year,
        citations: record.citations.clone(),
    })
}

pub fn detokenize(tokens: &[String]) -> String {
    tokens.join(" ")
}
