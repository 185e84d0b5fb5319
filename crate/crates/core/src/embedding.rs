//! Word embeddings: skip-gram training with negative sampling, the word2vec
//! text format, document averaging and cosine queries.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Vocabulary plus one `dim`-dimensional vector per word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
}

/// Result of averaging a token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub vector: Vec<f64>,
    /// Tokens that had a vector.
    pub used: usize,
    /// Tokens skipped as out of vocabulary.
    pub oov: usize,
}

impl EmbeddingModel {
    /// Builds a model from words and a row-major `words.len() × dim` matrix.
    pub fn new(words: Vec<String>, vectors: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be >= 1".into()));
        }
        if vectors.len() != words.len() * dim {
            return Err(Error::InvalidInput(format!(
                "{} words with dimension {dim} need {} values, got {}",
                words.len(),
                words.len() * dim,
                vectors.len()
            )));
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite component in vector of {:?}",
                words[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInput(format!("invalid vocabulary word {w:?}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(EmbeddingModel {
            dim,
            words,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.vectors[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    /// Mean of the in-vocabulary token vectors, or `None` when no token has
    /// a vector.
    pub fn mean_vector<'a, I>(&self, tokens: I) -> Option<DocVector>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut sum = vec![0.0; self.dim];
        let (mut used, mut oov) = (0usize, 0usize);
        for t in tokens {
            match self.vector(t) {
                Some(v) => {
                    for (s, x) in sum.iter_mut().zip(v) {
                        *s += x;
                    }
                    used += 1;
                }
                None => oov += 1,
            }
        }
        if used == 0 {
            return None;
        }
        let n = used as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        Some(DocVector {
            vector: sum,
            used,
            oov,
        })
    }

    /// Average embedding of a document. Out-of-vocabulary tokens are skipped
    /// and counted.
    pub fn doc_vector(&self, doc: &Document) -> Result<DocVector> {
        self.mean_vector(doc.tokens.iter().map(String::as_str))
            .ok_or_else(|| Error::EmptyDocument {
                doi: doc.doi.clone(),
            })
    }

    fn checked_vector(&self, word: &str) -> Result<&[f64]> {
        let v = self
            .vector(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
        if norm(v) == 0.0 {
            return Err(Error::Undefined(format!("zero vector for {word:?}")));
        }
        Ok(v)
    }

    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64> {
        let a = self.checked_vector(w1)?;
        let b = self.checked_vector(w2)?;
        Ok(cosine(a, b))
    }

    /// Words with cosine similarity at least `threshold` to `seed`, the seed
    /// itself excluded, most similar first, at most `k` of them.
    pub fn neighbors(&self, seed: &str, threshold: f64, k: usize) -> Result<Vec<(String, f64)>> {
        let s = self.checked_vector(seed)?;
        let s_norm = norm(s);
        let mut hits: Vec<(String, f64)> = self
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| w.as_str() != seed)
            .filter_map(|(i, w)| {
                let v = self.row(i);
                let n = norm(v);
                if n == 0.0 {
                    return None;
                }
                let c = (dot(s, v) / (s_norm * n)).clamp(-1.0, 1.0);
                (c >= threshold).then(|| (w.clone(), c))
            })
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        hits.truncate(k);
        Ok(hits)
    }

    /// Serializes in the word2vec text format. Values are written with the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                let _ = write!(out, " {x:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header".into()))?;
        let mut parts = header.split_whitespace();
        let mut header_field = |name: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| err(1, format!("header must be \"<vocab_size> <dim>\" ({name})")))
        };
        let n = header_field("vocab_size")?;
        let dim = header_field("dim")?;
        if dim == 0 {
            return Err(err(1, "dimension must be >= 1".into()));
        }
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for (idx, line) in lines {
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            let before = vectors.len();
            for f in fields {
                let x: f64 = f
                    .parse()
                    .map_err(|_| err(idx + 1, format!("bad number {f:?}")))?;
                vectors.push(x);
            }
            if vectors.len() - before != dim {
                return Err(err(
                    idx + 1,
                    format!("expected {dim} values for {word:?}, got {}", vectors.len() - before),
                ));
            }
            words.push(word.to_string());
        }
        if words.len() != n {
            return Err(err(
                1,
                format!("header declares {n} words but file has {}", words.len()),
            ));
        }
        EmbeddingModel::new(words, vectors, dim)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity of two nonzero vectors, clamped to [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipgramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
    /// Worker threads. More than one runs lock-free parallel updates whose
    /// result is not reproducible from the seed.
    pub workers: usize,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 100,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            seed: 1,
            workers: 1,
        }
    }
}

impl SkipgramConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidInput(format!("skip-gram {name} must be >= 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning rate must be positive".into()));
        }
        Ok(())
    }
}

// Logits beyond this are treated as saturated, as in the reference word2vec.
const MAX_EXP: f64 = 6.0;

/// f64 matrix shared between hogwild workers. Relaxed atomics compile to
/// plain loads and stores; races between workers only lose updates.
struct SharedMatrix {
    cols: usize,
    data: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn from_values(values: Vec<f64>, cols: usize) -> Self {
        SharedMatrix {
            cols,
            data: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        f64::from_bits(self.data[row * self.cols + col].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col].store(v.to_bits(), Ordering::Relaxed);
    }

    fn into_values(self) -> Vec<f64> {
        self.data.into_iter().map(|a| f64::from_bits(a.into_inner())).collect()
    }
}

struct Trainer<'a> {
    cfg: &'a SkipgramConfig,
    input: SharedMatrix,
    output: SharedMatrix,
    noise: WeightedIndex<f64>,
    processed: AtomicU64,
    total: u64,
}

impl Trainer<'_> {
    fn run_shard(&self, shard: &[Vec<usize>], worker: usize) {
        let dim = self.cfg.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(worker as u64);
        let mut grad = vec![0.0; dim];
        let mut ctx = vec![0.0; dim];
        for _ in 0..self.cfg.epochs {
            for sentence in shard {
                let done = self.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                let progress = done as f64 / (self.total + 1) as f64;
                let lr = self.cfg.learning_rate * (1.0 - progress).max(1e-4);
                for (pos, &center) in sentence.iter().enumerate() {
                    let reach = self.cfg.window - rng.gen_range(0..self.cfg.window);
                    let lo = pos.saturating_sub(reach);
                    let hi = (pos + reach).min(sentence.len() - 1);
                    for (cpos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                        if cpos == pos {
                            continue;
                        }
                        for (c, v) in ctx.iter_mut().enumerate() {
                            *v = self.input.get(context, c);
                        }
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        for d in 0..=self.cfg.negatives {
                            let (target, label) = if d == 0 {
                                (center, 1.0)
                            } else {
                                let t = self.noise.sample(&mut rng);
                                if t == center {
                                    continue;
                                }
                                (t, 0.0)
                            };
                            let f: f64 = (0..dim).map(|c| ctx[c] * self.output.get(target, c)).sum();
                            let pred = if f > MAX_EXP {
                                1.0
                            } else if f < -MAX_EXP {
                                0.0
                            } else {
                                1.0 / (1.0 + (-f).exp())
                            };
                            let g = (label - pred) * lr;
                            for c in 0..dim {
                                let out = self.output.get(target, c);
                                grad[c] += g * out;
                                self.output.set(target, c, out + g * ctx[c]);
                            }
                        }
                        for (c, g) in grad.iter().enumerate() {
                            self.input.set(context, c, ctx[c] + g);
                        }
                    }
                }
            }
        }
    }
}

/// Trains skip-gram embeddings with negative sampling.
///
/// The vocabulary is every token with frequency at least `min_count`,
/// ordered by descending frequency then lexicographically. Negatives are
/// drawn from the unigram distribution raised to 0.75 and the learning rate
/// decays linearly over all epochs. With one worker the result is a pure
/// function of the documents and the config.
pub fn train_skipgram(docs: &[Document], cfg: &SkipgramConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for d in docs {
        for t in &d.tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_count)
        .collect();
    if vocab.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no token occurs at least {} times",
            cfg.min_count
        )));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();

    let sentences: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.tokens
                .iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect();
    let total = sentences.iter().map(|s| s.len() as u64).sum::<u64>() * cfg.epochs as u64;

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init: Vec<f64> = (0..vocab.len() * dim)
        .map(|_| (rng.gen::<f64>() - 0.5) / dim as f64)
        .collect();
    let noise = WeightedIndex::new(vocab.iter().map(|&(_, c)| (c as f64).powf(0.75)))
        .map_err(|e| Error::Numeric(format!("noise distribution: {e}")))?;

    let trainer = Trainer {
        cfg,
        input: SharedMatrix::from_values(init, dim),
        output: SharedMatrix::from_values(vec![0.0; vocab.len() * dim], dim),
        noise,
        processed: AtomicU64::new(0),
        total,
    };
    if cfg.workers == 1 {
        trainer.run_shard(&sentences, 1);
    } else {
        let shard_len = sentences.len().div_ceil(cfg.workers).max(1);
        std::thread::scope(|s| {
            for (w, shard) in sentences.chunks(shard_len).enumerate() {
                let trainer = &trainer;
                s.spawn(move || trainer.run_shard(shard, w + 1));
            }
        });
    }

    let words = vocab.iter().map(|(w, _)| w.to_string()).collect();
    EmbeddingModel::new(words, trainer.input.into_values(), dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn model(words: &[(&str, &[f64])]) -> EmbeddingModel {
        let dim = words[0].1.len();
        EmbeddingModel::new(
            words.iter().map(|(w, _)| w.to_string()).collect(),
            words.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
            dim,
        )
        .unwrap()
    }

    fn doc(tokens: &[&str]) -> Document {
        Document {
            doi: "d".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            pub_year: 2020,
            citations: Default::default(),
        }
    }

    #[test]
    fn doc_vector_basics() {
        let m = model(&[("a", &[1.0, 2.0]), ("b", &[-1.0, -2.0]), ("c", &[3.0, 0.5])]);
        assert_eq!(m.doc_vector(&doc(&["c"])).unwrap().vector, [3.0, 0.5]);
        assert_eq!(m.doc_vector(&doc(&["a", "b"])).unwrap().vector, [0.0, 0.0]);
        assert_eq!(m.doc_vector(&doc(&["c"; 7])).unwrap().vector, [3.0, 0.5]);
        let dv = m.doc_vector(&doc(&["a", "zzz", "a"])).unwrap();
        assert_eq!((dv.used, dv.oov), (2, 1));
        match m.doc_vector(&doc(&["zzz"])) {
            Err(Error::EmptyDocument { doi }) => assert_eq!(doi, "d"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cosine_cases() {
        let m = model(&[
            ("x", &[1.0, 0.0]),
            ("y", &[0.0, 2.0]),
            ("z", &[0.0, 0.0]),
            ("x2", &[1.0, 0.0]),
        ]);
        assert_eq!(m.cosine("x", "x").unwrap(), 1.0);
        assert_eq!(m.cosine("x", "y").unwrap(), 0.0);
        assert!(matches!(m.cosine("x", "nope"), Err(Error::OutOfVocabulary(w)) if w == "nope"));
        assert!(matches!(m.cosine("x", "z"), Err(Error::Undefined(_))));
        let n = m.neighbors("x", 0.7, 15).unwrap();
        assert_eq!(n, vec![("x2".to_string(), 1.0)]);
        assert!(m.neighbors("x", 1.01, 15).unwrap().is_empty());
        assert!(m.neighbors("nope", 0.7, 15).is_err());
    }

    #[test]
    fn neighbors_ranked_and_truncated() {
        let m = model(&[
            ("s", &[1.0, 0.0]),
            ("a", &[1.0, 0.1]),
            ("b", &[1.0, 0.5]),
            ("c", &[1.0, 0.3]),
            ("far", &[-1.0, 0.0]),
        ]);
        let n = m.neighbors("s", 0.7, 2).unwrap();
        let names: Vec<&str> = n.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names, ["a", "c"]);
    }

    #[test]
    fn text_format_round_trip_and_errors() {
        let m = model(&[("a", &[0.1, -2.5e-7, 3.0]), ("b/c", &[1.0 / 3.0, 0.0, -1.0])]);
        let back = EmbeddingModel::from_text(&m.to_text(), Path::new("v")).unwrap();
        assert_eq!(back, m);

        let short = "3 2\na 1 2\nb 3 4\n";
        assert!(EmbeddingModel::from_text(short, Path::new("v")).is_err());
        let bad_dim = "1 3\na 1 2\n";
        assert!(EmbeddingModel::from_text(bad_dim, Path::new("v")).is_err());

        let handmade = "2 3\nvirus 0.5 0.25 -1\nvaccine 0.4 0.2 -0.9\n";
        let m = EmbeddingModel::from_text(handmade, Path::new("v")).unwrap();
        assert_eq!(m.dim(), 3);
        assert!(m.cosine("virus", "vaccine").unwrap() > 0.99);
    }

    /// "a" and "b" are interchangeable within one family of contexts; "c"
    /// lives in another.
    fn substitution_corpus() -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let left = ["f1", "f2", "f3"];
        let right = ["g1", "g2", "g3"];
        (0..300)
            .map(|i| {
                let (ctx, w) = match i % 3 {
                    0 => (&left, "a"),
                    1 => (&left, "b"),
                    _ => (&right, "c"),
                };
                let mut t: Vec<&str> = (0..6).map(|_| ctx[rng.gen_range(0..3)]).collect();
                t.insert(3, w);
                let mut d = doc(&t);
                d.doi = format!("d{i}");
                d
            })
            .collect()
    }

    #[test]
    fn skipgram_groups_interchangeable_words() {
        let cfg = SkipgramConfig {
            dim: 16,
            window: 3,
            epochs: 20,
            ..SkipgramConfig::default()
        };
        let docs = substitution_corpus();
        let m = train_skipgram(&docs, &cfg).unwrap();
        assert_eq!(m.dim(), 16);
        assert_eq!(m.len(), 9);
        let ab = m.cosine("a", "b").unwrap();
        let ac = m.cosine("a", "c").unwrap();
        assert!(ab > ac, "cos(a,b)={ab} cos(a,c)={ac}");

        let again = train_skipgram(&docs, &cfg).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn skipgram_default_dims_and_min_count() {
        let docs = substitution_corpus();
        let m = train_skipgram(&docs, &SkipgramConfig { epochs: 1, ..Default::default() }).unwrap();
        assert_eq!(m.dim(), 100);
        let cfg = SkipgramConfig {
            min_count: 101,
            epochs: 1,
            dim: 4,
            ..Default::default()
        };
        let m = train_skipgram(&docs, &cfg).unwrap();
        // f1..f6 each occur ~200 times; a, b, c exactly 100
        assert_eq!(m.len(), 6);
        assert!(!m.contains("a"));
        let cfg = SkipgramConfig {
            min_count: 100_000,
            ..cfg
        };
        assert!(train_skipgram(&docs, &cfg).is_err());
    }

    #[test]
    fn parallel_training_is_finite() {
        let cfg = SkipgramConfig {
            dim: 8,
            window: 3,
            epochs: 3,
            workers: 4,
            learning_rate: 0.5,
            ..Default::default()
        };
        let m = train_skipgram(&substitution_corpus(), &cfg).unwrap();
        assert!(m.words().iter().all(|w| m.vector(w).unwrap().iter().all(|x| x.is_finite())));
    }

    proptest! {
        #[test]
        fn cosine_symmetric(a in proptest::collection::vec(-5.0f64..5.0, 4), b in proptest::collection::vec(-5.0f64..5.0, 4)) {
            prop_assume!(norm(&a) > 1e-6 && norm(&b) > 1e-6);
            prop_assert_eq!(cosine(&a, &b), cosine(&b, &a));
        }

        #[test]
        fn concatenation_averages(
            seq in proptest::collection::vec(0usize..3, 1..20),
        ) {
            let m = model(&[("a", &[1.0, 2.0]), ("b", &[-0.5, 4.0]), ("c", &[3.0, 0.25])]);
            let names = ["a", "b", "c"];
            let first: Vec<&str> = seq.iter().map(|&i| names[i]).collect();
            let second: Vec<&str> = seq.iter().rev().map(|&i| names[(i + 1) % 3]).collect();
            let both: Vec<&str> = first.iter().chain(&second).copied().collect();
            let v1 = m.doc_vector(&doc(&first)).unwrap().vector;
            let v2 = m.doc_vector(&doc(&second)).unwrap().vector;
            let v = m.doc_vector(&doc(&both)).unwrap().vector;
            for c in 0..2 {
                prop_assert!((v[c] - (v1[c] + v2[c]) / 2.0).abs() < 1e-12);
            }
        }
    }
}
