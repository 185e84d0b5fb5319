//! SMER word scores.
//!
//! A word is scored by feeding its embedding to the document classifier as
//! if it were a one-word abstract. Since a document's vector is the mean of
//! its word vectors and the classifier is affine before the logistic link,
//! the document logit equals the mean of its word logits exactly. The
//! explanation therefore reproduces the model's prediction for every
//! document, which `explain_document` checks at runtime.

use std::collections::{HashMap, HashSet};
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::corpus::Document;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::models::{abstract_logit, logistic, LinearClassifier};

/// Relative tolerance of the fidelity identity, scaled as `tol * (1 + |logit|)`.
pub const FIDELITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordScore {
    pub word: String,
    pub logit: f64,
    /// Documents in the counting window that contain the word.
    pub num_art: u64,
    /// Earliest publication year of a corpus document containing the word.
    pub first_year: Option<i32>,
}

impl WordScore {
    pub fn score(&self) -> f64 {
        logistic(self.logit)
    }

    pub fn cscore(&self) -> f64 {
        self.score() * self.num_art as f64
    }

    /// CScore as displayed in reports, rounded to the nearest integer.
    pub fn cscore_rounded(&self) -> i64 {
        cscore_display(self.score(), self.num_art)
    }
}

/// `score × num_art` rounded to the nearest integer.
pub fn cscore_display(score: f64, num_art: u64) -> i64 {
    (score * num_art as f64).round() as i64
}

fn word_logit(clf: &LinearClassifier, model: &EmbeddingModel, w: &str) -> Result<f64> {
    let v = model
        .mean_vector(std::iter::once(w))
        .ok_or_else(|| Error::OutOfVocabulary(w.to_string()))?;
    Ok(clf.logit(&v.vector))
}

/// SMER score of a single word. The word only needs an embedding; it does
/// not have to occur in the classifier's training documents.
pub fn score_word(clf: &LinearClassifier, model: &EmbeddingModel, w: &str) -> Result<WordScore> {
    clf.require_embedding(model)?;
    Ok(WordScore {
        word: w.to_string(),
        logit: word_logit(clf, model, w)?,
        num_art: 0,
        first_year: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenScore {
    pub word: String,
    pub logit: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub doi: String,
    pub doc_logit: f64,
    pub doc_score: f64,
    /// One entry per in-vocabulary token, in document order.
    pub tokens: Vec<TokenScore>,
    /// Tokens without an embedding; excluded from both sides of the identity.
    pub oov: Vec<String>,
}

/// Per-token SMER scores of a document together with the document score.
/// Fails with [`Error::Fidelity`] if the mean token logit differs from the
/// document logit beyond [`FIDELITY_TOL`].
pub fn explain_document(
    clf: &LinearClassifier,
    model: &EmbeddingModel,
    doc: &Document,
) -> Result<Explanation> {
    let doc_logit = abstract_logit(clf, model, doc)?;
    let mut tokens = Vec::with_capacity(doc.tokens.len());
    let mut oov = Vec::new();
    for t in &doc.tokens {
        if model.contains(t) {
            let logit = word_logit(clf, model, t)?;
            tokens.push(TokenScore {
                word: t.clone(),
                logit,
                score: logistic(logit),
            });
        } else {
            oov.push(t.clone());
        }
    }
    let mean = tokens.iter().map(|t| t.logit).sum::<f64>() / tokens.len() as f64;
    if !fidelity_holds(doc_logit, mean) {
        return Err(Error::Fidelity {
            doi: doc.doi.clone(),
            doc_logit,
            mean_word_logit: mean,
        });
    }
    Ok(Explanation {
        doi: doc.doi.clone(),
        doc_logit,
        doc_score: logistic(doc_logit),
        tokens,
        oov,
    })
}

pub fn fidelity_holds(doc_logit: f64, mean_word_logit: f64) -> bool {
    (doc_logit - mean_word_logit).abs() <= FIDELITY_TOL * (1.0 + doc_logit.abs())
}

fn by_score_desc(a: &WordScore, b: &WordScore) -> std::cmp::Ordering {
    b.score()
        .total_cmp(&a.score())
        .then_with(|| b.logit.total_cmp(&a.logit))
        .then_with(|| a.word.cmp(&b.word))
}

/// Scores `words` (default: the whole embedding vocabulary) and sorts them
/// by score, highest first, ties broken lexicographically. Where the
/// logistic saturates in floating point the logit decides, so the order is
/// always the logit order.
pub fn rank_words(
    clf: &LinearClassifier,
    model: &EmbeddingModel,
    words: Option<&[String]>,
) -> Result<Vec<WordScore>> {
    let words = words.unwrap_or_else(|| model.words());
    let mut scored = words
        .iter()
        .map(|w| score_word(clf, model, w))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(by_score_desc);
    Ok(scored)
}

/// Replaces position `k` of `doc` with `replacement` and reports whether the
/// document score moves in the same direction as the word score.
pub fn monotonicity_check(
    clf: &LinearClassifier,
    model: &EmbeddingModel,
    doc: &Document,
    k: usize,
    replacement: &str,
) -> Result<bool> {
    let original = doc
        .tokens
        .get(k)
        .ok_or_else(|| Error::InvalidInput(format!("position {k} outside document")))?;
    let w_old = score_word(clf, model, original)?.score();
    let w_new = score_word(clf, model, replacement)?.score();
    let mut swapped = doc.clone();
    swapped.tokens[k] = replacement.to_string();
    let d_old = logistic(abstract_logit(clf, model, doc)?);
    let d_new = logistic(abstract_logit(clf, model, &swapped)?);
    Ok(sign(w_new - w_old) == sign(d_new - d_old))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Per-word document frequency within a publication-year window, plus the
/// first year each word appears anywhere in the corpus.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    num_art: HashMap<String, u64>,
    first_year: HashMap<String, i32>,
}

impl CorpusStats {
    pub fn new(docs: &[Document], window: Option<RangeInclusive<i32>>) -> Self {
        let mut stats = CorpusStats::default();
        for d in docs {
            let in_window = window.as_ref().map_or(true, |w| w.contains(&d.pub_year));
            let distinct: HashSet<&str> = d.tokens.iter().map(String::as_str).collect();
            for w in distinct {
                if in_window {
                    *stats.num_art.entry(w.to_string()).or_default() += 1;
                }
                stats
                    .first_year
                    .entry(w.to_string())
                    .and_modify(|y| *y = (*y).min(d.pub_year))
                    .or_insert(d.pub_year);
            }
        }
        stats
    }

    pub fn num_art(&self, word: &str) -> u64 {
        self.num_art.get(word).copied().unwrap_or(0)
    }

    pub fn first_year(&self, word: &str) -> Option<i32> {
        self.first_year.get(word).copied()
    }

    fn annotate(&self, mut ws: WordScore) -> WordScore {
        ws.num_art = self.num_art(&ws.word);
        ws.first_year = self.first_year(&ws.word);
        ws
    }
}

/// Words occurring in the window, with an embedding, sorted by
/// `CScore = score × num_art` (highest first). With `first_seen_after`,
/// only words whose first corpus appearance is later than that year remain.
pub fn cscore_table(
    clf: &LinearClassifier,
    model: &EmbeddingModel,
    docs: &[Document],
    window: RangeInclusive<i32>,
    first_seen_after: Option<i32>,
) -> Result<Vec<WordScore>> {
    if window.is_empty() {
        return Err(Error::InvalidInput("empty year window".into()));
    }
    clf.require_embedding(model)?;
    let stats = CorpusStats::new(docs, Some(window));
    let mut candidates: Vec<&String> = stats
        .num_art
        .keys()
        .filter(|w| model.contains(w))
        .filter(|w| match first_seen_after {
            Some(after) => stats.first_year(w).is_some_and(|y| y > after),
            None => true,
        })
        .collect();
    candidates.sort();
    let mut rows = candidates
        .into_iter()
        .map(|w| score_word(clf, model, w).map(|s| stats.annotate(s)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.cscore()
            .total_cmp(&a.cscore())
            .then_with(|| by_score_desc(a, b))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborRow {
    #[serde(flatten)]
    pub word: WordScore,
    pub cosine: f64,
}

/// Embedding neighbours of `seed` with cosine at least `threshold`,
/// re-sorted by SMER score and truncated to `k`. The seed is never listed.
pub fn neighbor_report(
    clf: &LinearClassifier,
    model: &EmbeddingModel,
    stats: &CorpusStats,
    seed: &str,
    threshold: f64,
    k: usize,
) -> Result<Vec<NeighborRow>> {
    clf.require_embedding(model)?;
    let candidates = model.neighbors(seed, threshold, usize::MAX)?;
    let mut rows = candidates
        .into_iter()
        .map(|(w, cosine)| {
            score_word(clf, model, &w).map(|s| NeighborRow {
                word: stats.annotate(s),
                cosine,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| by_score_desc(&a.word, &b.word));
    rows.truncate(k);
    Ok(rows)
}
