//! Ridge logistic regression over averaged embeddings (the host model for
//! SMER) and over binary bag-of-words vectors (the odds-ratio baseline).

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::embedding::{dot, EmbeddingModel};
use crate::error::{Error, Result};
use crate::targets::LabeledDoc;

/// The logistic function `1 / (1 + e^-x)`, evaluated without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpace {
    Embedding {
        dim: usize,
        /// SHA-256 of the vectors file the classifier was trained against.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding_sha256: Option<String>,
    },
    Bow {
        dictionary: Vec<String>,
    },
}

impl FeatureSpace {
    pub fn dim(&self) -> usize {
        match self {
            FeatureSpace::Embedding { dim, .. } => *dim,
            FeatureSpace::Bow { dictionary } => dictionary.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub feature_space: FeatureSpace,
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearClassifier {
    pub fn new(feature_space: FeatureSpace, intercept: f64, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != feature_space.dim() {
            return Err(Error::InvalidInput(format!(
                "{} weights for a {}-dimensional feature space",
                weights.len(),
                feature_space.dim()
            )));
        }
        if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("non-finite classifier coefficient".into()));
        }
        Ok(LinearClassifier {
            feature_space,
            intercept,
            weights,
        })
    }

    /// `intercept + weightsᵀ x`.
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        logistic(self.logit(x))
    }

    /// Odds `p / (1 - p)`, with `1 - p` evaluated as `L(-logit)`.
    pub fn predict_odds(&self, x: &[f64]) -> f64 {
        let z = self.logit(x);
        logistic(z) / logistic(-z)
    }

    pub fn is_embedding(&self) -> bool {
        matches!(self.feature_space, FeatureSpace::Embedding { .. })
    }

    pub(crate) fn require_embedding(&self, model: &EmbeddingModel) -> Result<()> {
        match &self.feature_space {
            FeatureSpace::Embedding { dim, .. } if *dim == model.dim() => Ok(()),
            FeatureSpace::Embedding { dim, .. } => Err(Error::InvalidInput(format!(
                "classifier expects {dim}-dimensional embeddings, model has {}",
                model.dim()
            ))),
            FeatureSpace::Bow { .. } => Err(Error::InvalidInput(
                "an embedding classifier is required, got a bag-of-words one".into(),
            )),
        }
    }

    pub fn bow_dictionary(&self) -> Result<BowDictionary> {
        match &self.feature_space {
            FeatureSpace::Bow { dictionary } => BowDictionary::new(dictionary.clone()),
            FeatureSpace::Embedding { .. } => Err(Error::InvalidInput(
                "a bag-of-words classifier is required, got an embedding one".into(),
            )),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let clf: LinearClassifier = crate::io::read_json(path)?;
        LinearClassifier::new(clf.feature_space, clf.intercept, clf.weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Ridge strength on the weights; the intercept is not penalized.
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    /// Unused by the deterministic optimizer; kept so configs record it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1.0,
            max_iters: 10_000,
            tol: 1e-8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    /// Objective value before the first step and after every accepted step.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub classifier: LinearClassifier,
    pub report: TrainReport,
}

/// Row access for the optimizer, so dense embedding features and sparse
/// binary BoW features share one training loop.
pub trait Design {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn row_dot(&self, row: usize, w: &[f64]) -> f64;
    /// `out += scale * x_row`.
    fn add_row(&self, row: usize, scale: f64, out: &mut [f64]);
}

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseDesign {
    cols: usize,
    data: Vec<f64>,
}

impl DenseDesign {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged feature matrix".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite feature value".into()));
        }
        Ok(DenseDesign { cols, data })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl Design for DenseDesign {
    fn rows(&self) -> usize {
        if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        }
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        dot(self.row(row), w)
    }
    fn add_row(&self, row: usize, scale: f64, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(self.row(row)) {
            *o += scale * x;
        }
    }
}

/// Binary indicator rows stored as their active column indices.
#[derive(Debug, Clone)]
pub struct SparseBinaryDesign {
    cols: usize,
    rows: Vec<Vec<usize>>,
}

impl SparseBinaryDesign {
    pub fn new(cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.iter().flatten().any(|&c| c >= cols) {
            return Err(Error::InvalidInput("column index out of range".into()));
        }
        Ok(SparseBinaryDesign { cols, rows })
    }
}

impl Design for SparseBinaryDesign {
    fn rows(&self) -> usize {
        self.rows.len()
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        self.rows[row].iter().map(|&c| w[c]).sum()
    }
    fn add_row(&self, row: usize, scale: f64, out: &mut [f64]) {
        for &c in &self.rows[row] {
            out[c] += scale;
        }
    }
}

struct Objective<'a, D: Design> {
    x: &'a D,
    y: &'a [f64],
    lambda: f64,
}

impl<D: Design> Objective<'_, D> {
    fn value(&self, b0: f64, w: &[f64]) -> f64 {
        let loss: f64 = (0..self.x.rows())
            .map(|i| {
                let z = b0 + self.x.row_dot(i, w);
                softplus(z) - self.y[i] * z
            })
            .sum();
        loss + 0.5 * self.lambda * dot(w, w)
    }

    fn gradient(&self, b0: f64, w: &[f64], g: &mut [f64]) -> f64 {
        g.iter_mut()
            .zip(w)
            .for_each(|(gi, wi)| *gi = self.lambda * wi);
        let mut g0 = 0.0;
        for i in 0..self.x.rows() {
            let r = logistic(b0 + self.x.row_dot(i, w)) - self.y[i];
            g0 += r;
            self.x.add_row(i, r, g);
        }
        g0
    }
}

/// Fits L2-penalized logistic regression by full-batch gradient descent
/// with Armijo backtracking. Every accepted step decreases the objective.
pub fn train_lr<D: Design>(
    x: &D,
    labels: &[u8],
    cfg: &TrainConfig,
    feature_space: FeatureSpace,
) -> Result<Fit> {
    let n = x.rows();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels for {n} feature rows",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least two training documents".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::InvalidInput(
            "training labels contain a single class".into(),
        ));
    }
    if !(cfg.l2_lambda >= 0.0 && cfg.l2_lambda.is_finite()) {
        return Err(Error::InvalidInput("l2_lambda must be >= 0".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput("tol must be > 0".into()));
    }
    if feature_space.dim() != x.cols() {
        return Err(Error::InvalidInput("feature space does not match design width".into()));
    }

    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let obj = Objective {
        x,
        y: &y,
        lambda: cfg.l2_lambda,
    };
    let d = x.cols();
    let rate = positives as f64 / n as f64;
    let mut b0 = (rate / (1.0 - rate)).ln();
    let mut w = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut cand = vec![0.0; d];
    let mut f = obj.value(b0, &w);
    let mut history = vec![f];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut gnorm = f64::INFINITY;

    while iterations < cfg.max_iters {
        let g0 = obj.gradient(b0, &w, &mut g);
        let gsq = g0 * g0 + dot(&g, &g);
        gnorm = gsq.sqrt();
        if !gnorm.is_finite() {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        if gnorm < cfg.tol {
            converged = true;
            break;
        }
        // Armijo backtracking; a step that cannot decrease f means we are at
        // the floating-point floor of the objective.
        let mut accepted = None;
        while step > 1e-20 {
            let cb0 = b0 - step * g0;
            for ((c, wi), gi) in cand.iter_mut().zip(&w).zip(&g) {
                *c = wi - step * gi;
            }
            let cf = obj.value(cb0, &cand);
            if cf <= f - 1e-4 * step * gsq {
                accepted = Some((cb0, cf));
                break;
            }
            step *= 0.5;
        }
        let Some((cb0, cf)) = accepted else {
            converged = true;
            break;
        };
        b0 = cb0;
        std::mem::swap(&mut w, &mut cand);
        f = cf;
        history.push(f);
        iterations += 1;
        step *= 2.0;
    }

    if !f.is_finite() {
        return Err(Error::Numeric("objective diverged".into()));
    }
    Ok(Fit {
        classifier: LinearClassifier::new(feature_space, b0, w)?,
        report: TrainReport {
            iterations,
            converged,
            final_grad_norm: gnorm,
            objective: history,
        },
    })
}

/// Fits the embedding classifier on averaged document vectors.
pub fn fit_embedding_classifier(
    model: &EmbeddingModel,
    docs: &[LabeledDoc],
    cfg: &TrainConfig,
    embedding_sha256: Option<String>,
) -> Result<Fit> {
    let rows = docs
        .iter()
        .map(|d| model.doc_vector(&d.doc).map(|v| v.vector))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<u8> = docs.iter().map(|d| d.y).collect();
    let design = DenseDesign::from_rows(&rows)?;
    // an empty row set leaves cols at 0; train_lr reports the size problem
    let space = FeatureSpace::Embedding {
        dim: if rows.is_empty() { 0 } else { model.dim() },
        embedding_sha256,
    };
    train_lr(&design, &labels, cfg, space)
}

/// Probability of the high-impact class for a document:
/// `L(intercept + weightsᵀ · mean word vector)`.
pub fn score_abstract(clf: &LinearClassifier, model: &EmbeddingModel, doc: &Document) -> Result<f64> {
    Ok(logistic(abstract_logit(clf, model, doc)?))
}

pub fn abstract_logit(clf: &LinearClassifier, model: &EmbeddingModel, doc: &Document) -> Result<f64> {
    clf.require_embedding(model)?;
    Ok(clf.logit(&model.doc_vector(doc)?.vector))
}

/// Black-box probability model over a token sequence, as consumed by the
/// perturbation-based explainers and the AOPC harness.
pub trait Predictor: Sync {
    fn predict(&self, tokens: &[&str]) -> Result<f64>;

    fn predict_doc(&self, doc: &Document) -> Result<f64> {
        let tokens: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        self.predict(&tokens)
    }
}

impl<F> Predictor for F
where
    F: Fn(&[&str]) -> Result<f64> + Sync,
{
    fn predict(&self, tokens: &[&str]) -> Result<f64> {
        self(tokens)
    }
}

/// The embedding classifier as a [`Predictor`]. A token sequence with no
/// in-vocabulary word is scored by the intercept alone.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingPredictor<'a> {
    pub classifier: &'a LinearClassifier,
    pub model: &'a EmbeddingModel,
}

impl<'a> EmbeddingPredictor<'a> {
    pub fn new(classifier: &'a LinearClassifier, model: &'a EmbeddingModel) -> Result<Self> {
        classifier.require_embedding(model)?;
        Ok(EmbeddingPredictor { classifier, model })
    }
}

impl Predictor for EmbeddingPredictor<'_> {
    fn predict(&self, tokens: &[&str]) -> Result<f64> {
        let z = match self.model.mean_vector(tokens.iter().copied()) {
            Some(v) => self.classifier.logit(&v.vector),
            None => self.classifier.intercept,
        };
        Ok(logistic(z))
    }
}

/// The BoW classifier as a [`Predictor`]; unknown words are ignored.
#[derive(Debug, Clone)]
pub struct BowPredictor<'a> {
    pub classifier: &'a LinearClassifier,
    dictionary: BowDictionary,
}

impl<'a> BowPredictor<'a> {
    pub fn new(classifier: &'a LinearClassifier) -> Result<Self> {
        Ok(BowPredictor {
            classifier,
            dictionary: classifier.bow_dictionary()?,
        })
    }
}

impl Predictor for BowPredictor<'_> {
    fn predict(&self, tokens: &[&str]) -> Result<f64> {
        let active: BTreeSet<usize> = tokens
            .iter()
            .filter_map(|t| self.dictionary.index_of(t))
            .collect();
        let z = self.classifier.intercept
            + active.iter().map(|&k| self.classifier.weights[k]).sum::<f64>();
        Ok(logistic(z))
    }
}

/// Sorted word list indexing BoW features.
#[derive(Debug, Clone, PartialEq)]
pub struct BowDictionary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl BowDictionary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidInput("empty BoW dictionary".into()));
        }
        let index: HashMap<String, usize> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if index.len() != words.len() {
            return Err(Error::InvalidInput("duplicate word in BoW dictionary".into()));
        }
        Ok(BowDictionary { words, index })
    }

    /// All distinct tokens of the given documents, sorted.
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Result<Self> {
        let set: BTreeSet<&str> = docs
            .into_iter()
            .flat_map(|d| d.tokens.iter().map(String::as_str))
            .collect();
        Self::new(set.into_iter().map(str::to_string).collect())
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

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    fn active(&self, doc: &Document) -> Vec<usize> {
        let set: BTreeSet<usize> = doc.tokens.iter().filter_map(|t| self.index_of(t)).collect();
        set.into_iter().collect()
    }
}

/// Binary word-presence vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowVector(pub Vec<u8>);

impl BowVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }
}

pub fn bow_vectorize(doc: &Document, dict: &BowDictionary) -> BowVector {
    let mut v = vec![0u8; dict.len()];
    for k in dict.active(doc) {
        v[k] = 1;
    }
    BowVector(v)
}

/// Fits the BoW classifier; the dictionary is every token of the training
/// documents.
pub fn fit_bow_classifier(docs: &[LabeledDoc], cfg: &TrainConfig) -> Result<Fit> {
    let dict = BowDictionary::from_docs(docs.iter().map(|d| &d.doc))?;
    let rows = docs.iter().map(|d| dict.active(&d.doc)).collect();
    let design = SparseBinaryDesign::new(dict.len(), rows)?;
    let labels: Vec<u8> = docs.iter().map(|d| d.y).collect();
    train_lr(
        &design,
        &labels,
        cfg,
        FeatureSpace::Bow {
            dictionary: dict.words,
        },
    )
}

/// Odds ratio change `e^{γ_k}` of dictionary word `k`.
pub fn orc(clf: &LinearClassifier, k: usize) -> Result<f64> {
    let FeatureSpace::Bow { dictionary } = &clf.feature_space else {
        return Err(Error::InvalidInput("ORC needs a bag-of-words classifier".into()));
    };
    if k >= dictionary.len() {
        return Err(Error::InvalidInput(format!(
            "word index {k} outside dictionary of {}",
            dictionary.len()
        )));
    }
    Ok(clf.weights[k].exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn emb_space(dim: usize) -> FeatureSpace {
        FeatureSpace::Embedding {
            dim,
            embedding_sha256: None,
        }
    }

    fn doc(tokens: &[&str]) -> Document {
        Document {
            doi: "d".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            pub_year: 2020,
            citations: Default::default(),
        }
    }

    fn assert_monotone(report: &TrainReport) {
        for w in report.objective.windows(2) {
            assert!(w[1] <= w[0], "objective increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn logistic_identities() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(3f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(logistic(800.0), 1.0);
        assert!(logistic(-800.0) >= 0.0);
    }

    proptest! {
        #[test]
        fn logistic_symmetry(x in -50.0f64..50.0) {
            prop_assert!((logistic(-x) - (1.0 - logistic(x))).abs() < 1e-12);
        }

        #[test]
        fn logistic_increasing(a in -30.0f64..30.0, d in 1e-6f64..10.0) {
            prop_assert!(logistic(a + d) > logistic(a));
        }
    }

    fn blobs(n: usize, gap: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y = (i % 2) as u8;
            let c = if y == 1 { gap } else { -gap };
            rows.push(vec![c + rng.gen_range(-1.0..1.0), c + rng.gen_range(-1.0..1.0)]);
            ys.push(y);
        }
        (rows, ys)
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (rows, ys) = blobs(100, 2.0, 3);
        let x = DenseDesign::from_rows(&rows).unwrap();
        let cfg = TrainConfig {
            l2_lambda: 0.01,
            max_iters: 2000,
            ..TrainConfig::default()
        };
        let fit = train_lr(&x, &ys, &cfg, emb_space(2)).unwrap();
        assert_monotone(&fit.report);
        let correct = rows
            .iter()
            .zip(&ys)
            .filter(|(r, &y)| (fit.classifier.predict_proba(r) > 0.5) == (y == 1))
            .count();
        assert_eq!(correct, rows.len());
    }

    #[test]
    fn zero_features_give_base_rate() {
        let rows = vec![vec![0.0, 0.0]; 10];
        let ys = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        let x = DenseDesign::from_rows(&rows).unwrap();
        let fit = train_lr(&x, &ys, &TrainConfig::default(), emb_space(2)).unwrap();
        assert!(fit.classifier.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((fit.classifier.predict_proba(&[0.0, 0.0]) - 0.3).abs() < 1e-9);
        assert!(fit.report.converged);
    }

    #[test]
    fn stronger_ridge_shrinks_weights() {
        let (rows, ys) = blobs(60, 0.5, 9);
        let x = DenseDesign::from_rows(&rows).unwrap();
        let norm_at = |l2_lambda| {
            let cfg = TrainConfig {
                l2_lambda,
                ..TrainConfig::default()
            };
            let fit = train_lr(&x, &ys, &cfg, emb_space(2)).unwrap();
            assert_monotone(&fit.report);
            dot(&fit.classifier.weights, &fit.classifier.weights).sqrt()
        };
        let weak = norm_at(0.1);
        let strong = norm_at(100.0);
        assert!(strong < weak, "{strong} !< {weak}");
    }

    #[test]
    fn training_errors() {
        let x = DenseDesign::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(train_lr(&x, &[1, 1], &TrainConfig::default(), emb_space(1)).is_err());
        assert!(train_lr(&x, &[1], &TrainConfig::default(), emb_space(1)).is_err());
        assert!(matches!(
            DenseDesign::from_rows(&[vec![f64::NAN]]),
            Err(Error::Numeric(_))
        ));
        let bad = TrainConfig {
            tol: 0.0,
            ..TrainConfig::default()
        };
        assert!(train_lr(&x, &[0, 1], &bad, emb_space(1)).is_err());
    }

    #[test]
    fn bow_vectors() {
        let dict = BowDictionary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(bow_vectorize(&doc(&["a", "a", "c"]), &dict).0, [1, 0, 1]);
        assert_eq!(bow_vectorize(&doc(&["x", "y"]), &dict).0, [0, 0, 0]);
        assert_eq!(
            bow_vectorize(&doc(&["c", "b", "a"]), &dict),
            bow_vectorize(&doc(&["a", "c", "b"]), &dict)
        );
        assert!(BowDictionary::new(vec![]).is_err());
    }

    #[test]
    fn orc_values_and_errors() {
        let space = FeatureSpace::Bow {
            dictionary: vec!["a".into(), "b".into()],
        };
        let clf = LinearClassifier::new(space, 0.3, vec![0.0, 2f64.ln()]).unwrap();
        assert_eq!(orc(&clf, 0).unwrap(), 1.0);
        assert!((orc(&clf, 1).unwrap() - 2.0).abs() < 1e-15);
        assert!(orc(&clf, 2).is_err());
        let emb = LinearClassifier::new(emb_space(2), 0.0, vec![0.0, 0.0]).unwrap();
        assert!(orc(&emb, 0).is_err());
    }

    fn labeled(tokens: &[&str], y: u8, i: usize) -> LabeledDoc {
        let mut d = doc(tokens);
        d.doi = format!("d{i}");
        LabeledDoc { doc: d, y }
    }

    #[test]
    fn positive_only_word_has_orc_above_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fill = ["p", "q", "r", "s"];
        let docs: Vec<LabeledDoc> = (0..80)
            .map(|i| {
                let y = (i % 2) as u8;
                let mut t: Vec<&str> = (0..5).map(|_| fill[rng.gen_range(0..4)]).collect();
                if y == 1 && rng.gen_bool(0.7) {
                    t.push("star");
                }
                labeled(&t, y, i)
            })
            .collect();
        let fit = fit_bow_classifier(&docs, &TrainConfig::default()).unwrap();
        assert_monotone(&fit.report);
        let dict = fit.classifier.bow_dictionary().unwrap();
        let k = dict.index_of("star").unwrap();
        assert!(orc(&fit.classifier, k).unwrap() > 1.0);
    }

    #[test]
    fn score_abstract_cases() {
        let model = EmbeddingModel::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 0.0, 0.0, 1.0],
            2,
        )
        .unwrap();
        let zero = LinearClassifier::new(emb_space(2), 0.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(score_abstract(&zero, &model, &doc(&["a", "b"])).unwrap(), 0.5);
        let clf = LinearClassifier::new(emb_space(2), 0.2, vec![1.5, -0.5]).unwrap();
        let d = doc(&["a", "b", "b"]);
        let mean_logit = (clf.logit(&[1.0, 0.0]) + 2.0 * clf.logit(&[0.0, 1.0])) / 3.0;
        let s = score_abstract(&clf, &model, &d).unwrap();
        assert!((s - logistic(mean_logit)).abs() < 1e-12);
        assert!(score_abstract(&clf, &model, &doc(&["zz"])).is_err());

        let bow = LinearClassifier::new(
            FeatureSpace::Bow { dictionary: vec!["a".into()] },
            0.0,
            vec![1.0],
        )
        .unwrap();
        assert!(score_abstract(&bow, &model, &d).is_err());
    }

    #[test]
    fn classifier_json_round_trip() {
        let clf = LinearClassifier::new(
            FeatureSpace::Embedding {
                dim: 2,
                embedding_sha256: Some("ab".into()),
            },
            -0.123456789012345678,
            vec![1.0 / 3.0, 2e-17],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("clf.json");
        clf.save(&p).unwrap();
        assert_eq!(LinearClassifier::load(&p).unwrap(), clf);
    }
}
