//! Evaluation harness: train/test splits, ROC-AUC, Extreme10% subsets,
//! ActImpact correlation and AOPC-global curves.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::targets::{derive_labels, ImpactIndex, LabelSpec, LabeledDoc};
use crate::xai::GlobalImportance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// Seeded shuffle of one labeled cohort, then a fractional split.
    Random,
    /// Train on earlier publication years, test on strictly later ones.
    Time,
    /// Train on citations up to year t; the held-out part of the latest
    /// cohort is labeled by citations in the following year.
    Semi,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Random => "random",
            SplitKind::Time => "time",
            SplitKind::Semi => "semi",
        })
    }
}

impl FromStr for SplitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => SplitKind::Random,
            "time" => SplitKind::Time,
            "semi" => SplitKind::Semi,
            other => return Err(Error::Usage(format!("unknown split kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub train_years: BTreeSet<i32>,
    /// Ignored by the random split, which tests on the training cohort.
    #[serde(default)]
    pub test_years: BTreeSet<i32>,
    pub train_cit_year: i32,
    /// Ignored by the random split.
    #[serde(default)]
    pub test_cit_year: i32,
    #[serde(default)]
    pub seed: u64,
}

fn default_train_fraction() -> f64 {
    0.8
}

impl SplitSpec {
    pub fn random(years: impl IntoIterator<Item = i32>, cit_year: i32, seed: u64) -> Self {
        SplitSpec {
            kind: SplitKind::Random,
            train_fraction: 0.8,
            train_years: years.into_iter().collect(),
            test_years: BTreeSet::new(),
            train_cit_year: cit_year,
            test_cit_year: cit_year,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.train_years.is_empty() {
            return Err(Error::InvalidInput("split has no training years".into()));
        }
        match self.kind {
            SplitKind::Random => {}
            SplitKind::Time => {
                let last_train = *self.train_years.iter().next_back().unwrap();
                match self.test_years.iter().next() {
                    Some(&first_test) if first_test > last_train => {}
                    _ => {
                        return Err(Error::InvalidInput(
                            "time split needs test years strictly after the training years".into(),
                        ))
                    }
                }
                if self.test_cit_year <= self.train_cit_year {
                    return Err(Error::InvalidInput(
                        "time split needs a later test citation year".into(),
                    ));
                }
            }
            SplitKind::Semi => {
                let last_train = *self.train_years.iter().next_back().unwrap();
                if self.test_years != BTreeSet::from([last_train]) {
                    return Err(Error::InvalidInput(format!(
                        "semi split tests on the latest training cohort {last_train}"
                    )));
                }
                if self.test_cit_year <= self.train_cit_year {
                    return Err(Error::InvalidInput(
                        "semi split needs a later test citation year".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<LabeledDoc>,
    pub test: Vec<LabeledDoc>,
}

fn shuffled(docs: &[Document], seed: u64) -> Vec<Document> {
    let mut sorted: Vec<Document> = docs.to_vec();
    // input order must not matter
    sorted.sort_by(|a, b| a.doi.cmp(&b.doi));
    sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    sorted
}

fn cut(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Builds labeled train and test sets. Labels are always derived from the
/// side's own citation year, so no test-horizon citations reach training.
pub fn split(docs: &[Document], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let in_years = |years: &BTreeSet<i32>| -> Vec<Document> {
        docs.iter()
            .filter(|d| years.contains(&d.pub_year))
            .cloned()
            .collect()
    };
    let train_spec = LabelSpec {
        pub_years: spec.train_years.clone(),
        cit_year: spec.train_cit_year,
    };
    let (train, test) = match spec.kind {
        SplitKind::Random => {
            let labeled = derive_labels(&shuffled(&in_years(&spec.train_years), spec.seed), &train_spec)?;
            let k = cut(labeled.len(), spec.train_fraction);
            let mut train = labeled;
            let test = train.split_off(k.min(train.len()));
            (train, test)
        }
        SplitKind::Time => {
            let cohort = shuffled(&in_years(&spec.train_years), spec.seed);
            let k = cut(cohort.len(), spec.train_fraction);
            let train = derive_labels(&cohort[..k.min(cohort.len())], &train_spec)?;
            let test_spec = LabelSpec {
                pub_years: spec.test_years.clone(),
                cit_year: spec.test_cit_year,
            };
            let test = derive_labels(&in_years(&spec.test_years), &test_spec)?;
            (train, test)
        }
        SplitKind::Semi => {
            let cohort = shuffled(&in_years(&spec.train_years), spec.seed);
            let k = cut(cohort.len(), spec.train_fraction);
            let (train_docs, held_out) = cohort.split_at(k.min(cohort.len()));
            let train = derive_labels(train_docs, &train_spec)?;
            let test_spec = LabelSpec {
                pub_years: spec.test_years.clone(),
                cit_year: spec.test_cit_year,
            };
            let test = derive_labels(held_out, &test_spec).map_err(|_| {
                Error::InvalidInput("semi split: no held-out documents in the test cohort".into())
            })?;
            (train, test)
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} split produced {} train and {} test documents",
            spec.kind,
            train.len(),
            test.len()
        )));
    }
    Ok(Split { train, test })
}

/// ROC-AUC via the Mann-Whitney statistic with midranks, so tied scores
/// contribute one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "auc: {} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("auc: NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the tied block i..=j shares the mean rank
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Indices of the Extreme10% subset: the `ceil(0.05 n)` least and most cited
/// documents in `cit_year`. Documents are ordered by (citations, doi), so
/// boundary ties resolve by doi and the two halves never overlap.
pub fn extreme10<D: AsRef<Document>>(docs: &[D], cit_year: i32) -> Result<Vec<usize>> {
    let n = docs.len();
    if n < 20 {
        return Err(Error::InvalidInput(format!(
            "Extreme10% needs at least 20 test documents, got {n}"
        )));
    }
    let m = (n * 5).div_ceil(100);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (docs[a].as_ref(), docs[b].as_ref());
        da.citations_in(cit_year)
            .cmp(&db.citations_in(cit_year))
            .then_with(|| da.doi.cmp(&db.doi))
    });
    let mut out: Vec<usize> = order[..m].to_vec();
    out.extend_from_slice(&order[n - m..]);
    Ok(out)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "pearson needs two equal-length series of at least 2 values, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("pearson: zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactPoint {
    pub word: String,
    pub importance: f64,
    pub act_impact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactCorrelation {
    pub r: f64,
    pub points: Vec<ImpactPoint>,
}

/// Pearson correlation between importance and ActImpact over the `top_n`
/// most and `bottom_n` least important words. Words that occur in none of
/// `docs` are skipped before selection.
pub fn actimpact_correlation(
    importance: &GlobalImportance,
    docs: &[Document],
    high: &BTreeSet<String>,
    top_n: usize,
    bottom_n: usize,
) -> Result<ImpactCorrelation> {
    actimpact_correlation_indexed(importance, &ImpactIndex::new(docs, high), top_n, bottom_n)
}

/// [`actimpact_correlation`] against a precomputed index.
pub fn actimpact_correlation_indexed(
    importance: &GlobalImportance,
    index: &ImpactIndex,
    top_n: usize,
    bottom_n: usize,
) -> Result<ImpactCorrelation> {
    let eligible: Vec<ImpactPoint> = importance
        .ranked()
        .iter()
        .filter_map(|(w, s)| {
            index.act_impact(w).map(|a| ImpactPoint {
                word: w.clone(),
                importance: *s,
                act_impact: a,
            })
        })
        .collect();
    if eligible.len() < top_n + bottom_n {
        return Err(Error::InvalidInput(format!(
            "ActImpact correlation needs {} eligible words, found {}",
            top_n + bottom_n,
            eligible.len()
        )));
    }
    let mut points: Vec<ImpactPoint> = eligible[..top_n].to_vec();
    points.extend_from_slice(&eligible[eligible.len() - bottom_n..]);
    let x: Vec<f64> = points.iter().map(|p| p.importance).collect();
    let y: Vec<f64> = points.iter().map(|p| p.act_impact).collect();
    Ok(ImpactCorrelation {
        r: pearson(&x, &y)?,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AopcPoint {
    pub k: usize,
    pub mean_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AopcCurve {
    pub points: Vec<AopcPoint>,
    /// Trapezoid area with k rescaled to [0, 1].
    pub area: f64,
    /// Trapezoid area in units of removed words.
    pub area_raw: f64,
}

impl AopcCurve {
    /// CSV with columns `k,mean_drop`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Trapezoid rule over `(x, y)` points with strictly increasing x. With
/// `normalize_x` the x-range is rescaled to [0, 1].
pub fn trapezoid_area(points: &[(f64, f64)], normalize_x: bool) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("trapezoid area needs at least 2 points".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Numeric("trapezoid area: non-finite point".into()));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidInput("trapezoid area: x must be strictly increasing".into()));
    }
    let twice: f64 = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    let area = twice / 2.0;
    if normalize_x {
        Ok(area / (points[points.len() - 1].0 - points[0].0))
    } else {
        Ok(area)
    }
}

/// AOPC-global: for k = 0..=K, deletes every occurrence of the top-k ranked
/// words from each document and records the signed mean probability drop
/// relative to the intact documents.
pub fn aopc_global(
    predict: &dyn Predictor,
    docs: &[Document],
    ranking: &GlobalImportance,
    k_max: usize,
) -> Result<AopcCurve> {
    if docs.is_empty() {
        return Err(Error::InvalidInput("AOPC needs test documents".into()));
    }
    if k_max > 0 && ranking.is_empty() {
        return Err(Error::InvalidInput("AOPC needs a nonempty ranking".into()));
    }
    let token_lists: Vec<Vec<&str>> = docs
        .iter()
        .map(|d| d.tokens.iter().map(String::as_str).collect())
        .collect();
    let base: Vec<f64> = token_lists
        .par_iter()
        .map(|t| predict.predict(t))
        .collect::<Result<_>>()?;
    let mut points = vec![AopcPoint { k: 0, mean_drop: 0.0 }];
    let mut removed: HashSet<&str> = HashSet::new();
    let ranked: Vec<&str> = ranking.top_words(k_max).collect();
    for k in 1..=k_max {
        if let Some(w) = ranked.get(k - 1) {
            removed.insert(w);
        }
        let drops: Vec<f64> = token_lists
            .par_iter()
            .zip(base.par_iter())
            .map(|(tokens, &p0)| {
                let kept: Vec<&str> = tokens.iter().copied().filter(|t| !removed.contains(t)).collect();
                Ok(p0 - predict.predict(&kept)?)
            })
            .collect::<Result<_>>()?;
        let mean_drop = drops.iter().sum::<f64>() / drops.len() as f64;
        if !mean_drop.is_finite() {
            return Err(Error::Numeric(format!("AOPC: non-finite mean drop at k={k}")));
        }
        points.push(AopcPoint { k, mean_drop });
    }
    let (area, area_raw) = if points.len() < 2 {
        (0.0, 0.0)
    } else {
        let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.k as f64, p.mean_drop)).collect();
        (trapezoid_area(&xy, true)?, trapezoid_area(&xy, false)?)
    };
    Ok(AopcCurve {
        points,
        area,
        area_raw,
    })
}
