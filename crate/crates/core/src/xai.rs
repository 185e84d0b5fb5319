//! Comparator explainers: a LIME-style local surrogate, its global
//! aggregations (GALE), a random baseline, and SMER wrapped in the same
//! global-importance interface.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::models::{LinearClassifier, Predictor};
use crate::smer::rank_words;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_features: usize,
    pub n_samples: usize,
    /// Ridge penalty of the surrogate.
    pub alpha: f64,
    /// Kernel width as a multiple of `sqrt(#distinct words)`.
    pub kernel_width_factor: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_features: 15,
            n_samples: 1000,
            alpha: 1.0,
            kernel_width_factor: 0.25,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeWeight {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub doi: String,
    /// Surrogate coefficients of the selected words, largest |weight| first.
    pub weights: Vec<LimeWeight>,
    pub n_features: usize,
    pub n_samples: usize,
    pub seed: u64,
}

/// Weighted ridge regression with an unpenalized intercept; returns the
/// coefficients. Columns of `x` are binary presence indicators.
fn weighted_ridge(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    let total: f64 = w.sum();
    let xm = x.tr_mul(w) / total;
    let ym = y.dot(w) / total;
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= xm.transpose();
    }
    let yc = y.add_scalar(-ym);
    let sw = w.map(f64::sqrt);
    let xw = DMatrix::from_fn(xc.nrows(), xc.ncols(), |i, j| xc[(i, j)] * sw[i]);
    let yw = yc.component_mul(&sw);
    let mut gram = xw.tr_mul(&xw);
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let rhs = xw.tr_mul(&yw);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("ridge system not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// Explains `predict` around `doc` with a sparse linear surrogate over word
/// presence.
///
/// Each perturbation removes every occurrence of a random subset of the
/// document's distinct words: the subset size is uniform on
/// `1..=(#words - 1)` and the subset uniform given its size. The first sample
/// is the unperturbed document. Samples are weighted by an exponential kernel
/// on the cosine distance to the full mask, a ridge model is fitted, the
/// `n_features` words with the largest |coefficient| are kept, and the
/// surrogate is refitted on those words alone.
pub fn lime_explain(
    predict: &dyn Predictor,
    doc: &Document,
    cfg: &LimeConfig,
) -> Result<LocalExplanation> {
    if cfg.n_samples < 10 {
        return Err(Error::InvalidInput("LIME needs at least 10 samples".into()));
    }
    let words = doc.distinct_tokens();
    let m = words.len();
    if m == 0 {
        return Err(Error::InvalidInput(format!("document {} is empty", doc.doi)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut masks = DMatrix::from_element(cfg.n_samples, m, 1.0);
    for s in 1..cfg.n_samples {
        let n_remove = rng.gen_range(1..=(m - 1).max(1));
        for j in sample(&mut rng, m, n_remove) {
            masks[(s, j)] = 0.0;
        }
    }

    let mut ys = DVector::zeros(cfg.n_samples);
    let mut kept: Vec<&str> = Vec::with_capacity(doc.tokens.len());
    let mut active: HashSet<&str> = HashSet::with_capacity(m);
    for s in 0..cfg.n_samples {
        active.clear();
        active.extend((0..m).filter(|&j| masks[(s, j)] == 1.0).map(|j| words[j]));
        kept.clear();
        kept.extend(doc.tokens.iter().map(String::as_str).filter(|t| active.contains(t)));
        ys[s] = predict.predict(&kept)?;
    }

    let width = cfg.kernel_width_factor * (m as f64).sqrt();
    let weights = DVector::from_fn(cfg.n_samples, |s, _| {
        let on = masks.row(s).sum();
        // cosine distance between the mask and the all-ones vector
        let d = 1.0 - (on / m as f64).sqrt();
        (-(d * d) / (width * width)).exp().sqrt()
    });

    let coef = weighted_ridge(&masks, &ys, &weights, cfg.alpha)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| coef[b].abs().total_cmp(&coef[a].abs()).then(a.cmp(&b)));
    order.truncate(cfg.n_features.min(m));

    let selected = masks.select_columns(order.iter());
    let refit = weighted_ridge(&selected, &ys, &weights, cfg.alpha)?;
    let mut out: Vec<LimeWeight> = order
        .iter()
        .zip(refit.iter())
        .map(|(&j, &w)| LimeWeight {
            word: words[j].to_string(),
            weight: w,
        })
        .collect();
    out.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then_with(|| a.word.cmp(&b.word)));
    if out.iter().any(|w| !w.weight.is_finite()) {
        return Err(Error::Numeric(format!("non-finite LIME weight for {}", doc.doi)));
    }
    Ok(LocalExplanation {
        doi: doc.doi.clone(),
        weights: out,
        n_features: cfg.n_features,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
    })
}

/// Per-document seed derived from the run seed and the doi, so results do
/// not depend on document order or thread scheduling.
pub fn doc_seed(seed: u64, doi: &str) -> u64 {
    let digest = crate::io::sha256_hex(doi.as_bytes());
    let h = u64::from_str_radix(&digest[..16], 16).unwrap_or(0);
    seed ^ h
}

/// Runs [`lime_explain`] over many documents in parallel. Each document gets
/// the seed `doc_seed(cfg.seed, doi)`.
pub fn lime_explain_all(
    predict: &dyn Predictor,
    docs: &[Document],
    cfg: &LimeConfig,
) -> Result<Vec<LocalExplanation>> {
    docs.par_iter()
        .map(|d| {
            let cfg = LimeConfig {
                seed: doc_seed(cfg.seed, &d.doi),
                ..cfg.clone()
            };
            lime_explain(predict, d, &cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    Smer,
    GlobalLime,
    GlobalAvgLime,
    Random,
    /// A ranking read from a file, e.g. produced by an external explainer.
    External,
}

impl fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImportanceMethod::Smer => "smer",
            ImportanceMethod::GlobalLime => "global_lime",
            ImportanceMethod::GlobalAvgLime => "global_avg_lime",
            ImportanceMethod::Random => "random",
            ImportanceMethod::External => "external",
        })
    }
}

impl FromStr for ImportanceMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "smer" => ImportanceMethod::Smer,
            "global_lime" => ImportanceMethod::GlobalLime,
            "global_avg_lime" => ImportanceMethod::GlobalAvgLime,
            "random" => ImportanceMethod::Random,
            "external" => ImportanceMethod::External,
            other => return Err(Error::Usage(format!("unknown importance method {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalImportance {
    method: ImportanceMethod,
    /// Words in rank order, most important first.
    ranked: Vec<(String, f64)>,
}

impl GlobalImportance {
    /// Ranks by descending score, ties lexicographic.
    pub fn from_scores(method: ImportanceMethod, scores: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut ranked: Vec<(String, f64)> = scores.into_iter().collect();
        if let Some((w, _)) = ranked.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::Numeric(format!("non-finite importance for {w:?}")));
        }
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let distinct: HashSet<&str> = ranked.iter().map(|(w, _)| w.as_str()).collect();
        if distinct.len() != ranked.len() {
            return Err(Error::InvalidInput("duplicate word in importance ranking".into()));
        }
        Ok(GlobalImportance { method, ranked })
    }

    pub fn method(&self) -> &ImportanceMethod {
        &self.method
    }

    pub fn ranked(&self) -> &[(String, f64)] {
        &self.ranked
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.ranked.iter().find(|(w, _)| w == word).map(|(_, s)| *s)
    }

    pub fn top_words(&self, k: usize) -> impl Iterator<Item = &str> {
        self.ranked.iter().take(k).map(|(w, _)| w.as_str())
    }

    /// Two-column CSV (`word,score`) in rank order. Reading accepts extra
    /// columns and `#` comment lines.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["word", "score"]).map_err(csv_err)?;
        for (word, score) in &self.ranked {
            w.write_record([word.as_str(), &score.to_string()]).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_csv(bytes: &[u8], path: &Path, method: ImportanceMethod) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            word: String,
            score: f64,
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let mut scores = Vec::new();
        for (i, rec) in r.deserialize::<Row>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(i + 2, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            scores.push((rec.word, rec.score));
        }
        Self::from_scores(method, scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaleMode {
    /// Sum of |weight| over the explanations that contain the word.
    SumImportance,
    /// That sum divided by the number of explanations containing the word.
    AverageImportance,
}

/// Aggregates local explanations into a global ranking.
pub fn gale_global(expls: &[LocalExplanation], mode: GaleMode) -> Result<GlobalImportance> {
    if expls.is_empty() {
        return Err(Error::InvalidInput("no local explanations to aggregate".into()));
    }
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for e in expls {
        for w in &e.weights {
            let entry = acc.entry(w.word.as_str()).or_default();
            entry.0 += w.weight.abs();
            entry.1 += 1;
        }
    }
    let method = match mode {
        GaleMode::SumImportance => ImportanceMethod::GlobalLime,
        GaleMode::AverageImportance => ImportanceMethod::GlobalAvgLime,
    };
    GlobalImportance::from_scores(
        method,
        acc.into_iter().map(|(w, (sum, n))| {
            let s = match mode {
                GaleMode::SumImportance => sum,
                GaleMode::AverageImportance => sum / n as f64,
            };
            (w.to_string(), s)
        }),
    )
}

/// I.i.d. uniform scores, reproducible from the seed.
pub fn random_importance(vocab: &[String], seed: u64) -> Result<GlobalImportance> {
    let mut sorted: Vec<&String> = vocab.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GlobalImportance::from_scores(
        ImportanceMethod::Random,
        sorted.into_iter().map(|w| (w.clone(), rng.gen::<f64>())).collect::<Vec<_>>(),
    )
}

/// SMER scores of `vocab` (default: the embedding vocabulary) as a global
/// ranking, in exactly the order produced by [`rank_words`].
pub fn smer_global(
    clf: &LinearClassifier,
    model: &EmbeddingModel,
    vocab: Option<&[String]>,
) -> Result<GlobalImportance> {
    let ranked = rank_words(clf, model, vocab)?
        .into_iter()
        .map(|w| {
            let s = w.score();
            (w.word, s)
        })
        .collect();
    Ok(GlobalImportance {
        method: ImportanceMethod::Smer,
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{EmbeddingPredictor, FeatureSpace};
    use crate::smer::score_word;

    fn doc(tokens: &[&str]) -> Document {
        Document {
            doi: "10.1/d".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            pub_year: 2020,
            citations: Default::default(),
        }
    }

    fn expl(doi: &str, w: &[(&str, f64)]) -> LocalExplanation {
        LocalExplanation {
            doi: doi.into(),
            weights: w
                .iter()
                .map(|(word, weight)| LimeWeight {
                    word: word.to_string(),
                    weight: *weight,
                })
                .collect(),
            n_features: 15,
            n_samples: 100,
            seed: 0,
        }
    }

    fn toy() -> (EmbeddingModel, LinearClassifier) {
        let words: Vec<String> = (0..20).map(|i| format!("w{i:02}")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vectors: Vec<f64> = (0..20 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = EmbeddingModel::new(words, vectors, 4).unwrap();
        let clf = LinearClassifier::new(
            FeatureSpace::Embedding {
                dim: 4,
                embedding_sha256: None,
            },
            0.1,
            vec![1.5, -2.0, 0.7, 1.1],
        )
        .unwrap();
        (model, clf)
    }

    #[test]
    fn constant_predictor_gives_zero_weights() {
        let constant = |_: &[&str]| -> Result<f64> { Ok(0.42) };
        let d = doc(&["a", "b", "c", "a", "d"]);
        let e = lime_explain(&constant, &d, &LimeConfig::default()).unwrap();
        assert!(!e.weights.is_empty());
        assert!(e.weights.iter().all(|w| w.weight.abs() < 1e-6));
    }

    #[test]
    fn feature_cap_and_determinism() {
        let (model, clf) = toy();
        let p = EmbeddingPredictor::new(&clf, &model).unwrap();
        let d = doc(&model.words().iter().map(String::as_str).collect::<Vec<_>>());
        let cfg = LimeConfig {
            n_samples: 300,
            ..LimeConfig::default()
        };
        let a = lime_explain(&p, &d, &cfg).unwrap();
        assert_eq!(a.weights.len(), 15);
        assert_eq!(a, lime_explain(&p, &d, &cfg).unwrap());
        let small = LimeConfig { n_samples: 5, ..cfg };
        assert!(lime_explain(&p, &d, &small).is_err());
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let rank = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
            let mut r = vec![0.0; v.len()];
            for (pos, &i) in idx.iter().enumerate() {
                r[i] = pos as f64;
            }
            r
        };
        crate::eval::pearson(&rank(a), &rank(b)).unwrap()
    }

    #[test]
    fn surrogate_agrees_with_smer_ranking() {
        let (model, clf) = toy();
        let p = EmbeddingPredictor::new(&clf, &model).unwrap();
        let d = doc(&model.words()[..12].iter().map(String::as_str).collect::<Vec<_>>());
        let cfg = LimeConfig {
            n_samples: 2000,
            ..LimeConfig::default()
        };
        let e = lime_explain(&p, &d, &cfg).unwrap();
        let lime: Vec<f64> = e.weights.iter().map(|w| w.weight).collect();
        let smer: Vec<f64> = e
            .weights
            .iter()
            .map(|w| score_word(&clf, &model, &w.word).unwrap().logit)
            .collect();
        let rho = spearman(&lime, &smer);
        assert!(rho > 0.8, "spearman {rho}");
    }

    #[test]
    fn gale_aggregations() {
        let single = [expl("a", &[("x", -0.5), ("y", 0.25)])];
        for mode in [GaleMode::SumImportance, GaleMode::AverageImportance] {
            let g = gale_global(&single, mode).unwrap();
            assert_eq!(g.score("x"), Some(0.5));
            assert_eq!(g.score("y"), Some(0.25));
        }
        let two = [expl("a", &[("x", 1.0)]), expl("b", &[("x", -1.0), ("z", 0.1)])];
        let sum = gale_global(&two, GaleMode::SumImportance).unwrap();
        let avg = gale_global(&two, GaleMode::AverageImportance).unwrap();
        assert_eq!(sum.score("x"), Some(2.0));
        assert_eq!(avg.score("x"), Some(1.0));
        assert_eq!(sum.score("absent"), None);
        for (w, s) in sum.ranked() {
            assert!(*s >= avg.score(w).unwrap());
        }
        assert_eq!(sum.method(), &ImportanceMethod::GlobalLime);
        assert!(gale_global(&[], GaleMode::SumImportance).is_err());
    }

    #[test]
    fn random_baseline() {
        let vocab: Vec<String> = (0..200).map(|i| format!("w{i}")).collect();
        let a = random_importance(&vocab, 3).unwrap();
        assert_eq!(a, random_importance(&vocab, 3).unwrap());
        let b = random_importance(&vocab, 4).unwrap();
        assert_ne!(
            a.top_words(200).collect::<Vec<_>>(),
            b.top_words(200).collect::<Vec<_>>()
        );
        assert!(random_importance(&[], 1).unwrap().is_empty());
    }

    #[test]
    fn random_rankings_are_exchangeable() {
        // chi-square on which of 4 words ranks first over 4000 seeds
        let vocab: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut counts = [0usize; 4];
        for seed in 0..4000 {
            let g = random_importance(&vocab, seed).unwrap();
            let top = g.top_words(1).next().unwrap();
            counts[vocab.iter().position(|w| w == top).unwrap()] += 1;
        }
        let expected = 1000.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.27, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn smer_global_matches_rank_words() {
        let (model, clf) = toy();
        let g = smer_global(&clf, &model, None).unwrap();
        let r = rank_words(&clf, &model, None).unwrap();
        let gw: Vec<&str> = g.top_words(usize::MAX).collect();
        let rw: Vec<&str> = r.iter().map(|w| w.word.as_str()).collect();
        assert_eq!(gw, rw);

        let flat = LinearClassifier::new(clf.feature_space.clone(), 0.0, vec![0.0; 4]).unwrap();
        let g = smer_global(&flat, &model, None).unwrap();
        let mut sorted = model.words().to_vec();
        sorted.sort();
        assert_eq!(g.top_words(usize::MAX).collect::<Vec<_>>(), sorted);

        // doubling every weight is a monotone transform of the logits
        let doubled = LinearClassifier::new(
            clf.feature_space.clone(),
            2.0 * clf.intercept,
            clf.weights.iter().map(|w| 2.0 * w).collect(),
        )
        .unwrap();
        let g2 = smer_global(&doubled, &model, None).unwrap();
        assert_eq!(
            g2.top_words(usize::MAX).collect::<Vec<_>>(),
            rw
        );
    }

    #[test]
    fn ranking_csv_round_trip() {
        let g = GlobalImportance::from_scores(
            ImportanceMethod::Random,
            vec![("a".to_string(), 0.5), ("b,c".to_string(), 0.75)],
        )
        .unwrap();
        let bytes = g.to_csv().unwrap();
        let back = GlobalImportance::from_csv(&bytes, Path::new("r.csv"), ImportanceMethod::Random).unwrap();
        assert_eq!(back, g);
        assert!(GlobalImportance::from_csv(b"word,score\na,zz\n", Path::new("r"), ImportanceMethod::External).is_err());
    }
}
