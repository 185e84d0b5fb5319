//! Binary impact labels and the ActImpact ground truth.
//!
//! A paper is highly cited when its citation count in the citation year
//! strictly exceeds the median over the papers published in the chosen
//! years. The strict inequality means ties at the median land in the low
//! class, so the two classes are only approximately balanced.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub pub_years: BTreeSet<i32>,
    pub cit_year: i32,
}

impl LabelSpec {
    pub fn new(pub_years: impl IntoIterator<Item = i32>, cit_year: i32) -> Self {
        LabelSpec {
            pub_years: pub_years.into_iter().collect(),
            cit_year,
        }
    }

    pub fn in_scope(&self, doc: &Document) -> bool {
        self.pub_years.contains(&doc.pub_year)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    #[serde(flatten)]
    pub doc: Document,
    pub y: u8,
}

impl AsRef<Document> for LabeledDoc {
    fn as_ref(&self) -> &Document {
        &self.doc
    }
}

/// Median of a multiset; the mean of the two middle values for even sizes.
pub fn median(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    })
}

/// Labels every document published in `spec.pub_years`; documents outside
/// the publication years are dropped.
pub fn derive_labels(docs: &[Document], spec: &LabelSpec) -> Result<Vec<LabeledDoc>> {
    if spec.pub_years.is_empty() {
        return Err(Error::InvalidInput("label spec has no publication years".into()));
    }
    let scoped: Vec<&Document> = docs.iter().filter(|d| spec.in_scope(d)).collect();
    let counts: Vec<u64> = scoped.iter().map(|d| d.citations_in(spec.cit_year)).collect();
    let med = median(&counts).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no documents published in {:?}",
            spec.pub_years
        ))
    })?;
    Ok(scoped
        .into_iter()
        .zip(counts)
        .map(|(d, c)| LabeledDoc {
            doc: d.clone(),
            y: u8::from(c as f64 > med),
        })
        .collect())
}

/// DOIs of the highly cited papers among those published in `pub_years`.
pub fn highly_cited_set(
    docs: &[Document],
    pub_years: &BTreeSet<i32>,
    cit_year: i32,
) -> Result<BTreeSet<String>> {
    let spec = LabelSpec {
        pub_years: pub_years.clone(),
        cit_year,
    };
    Ok(derive_labels(docs, &spec)?
        .into_iter()
        .filter(|l| l.y == 1)
        .map(|l| l.doc.doi)
        .collect())
}

/// Fraction of the documents containing `word` that are in `high`.
/// `docs` must already be restricted to the scope of interest.
pub fn act_impact(word: &str, docs: &[Document], high: &BTreeSet<String>) -> Result<f64> {
    let (mut with_word, mut with_word_high) = (0usize, 0usize);
    for d in docs.iter().filter(|d| d.contains(word)) {
        with_word += 1;
        if high.contains(&d.doi) {
            with_word_high += 1;
        }
    }
    if with_word == 0 {
        return Err(Error::Undefined(format!(
            "ActImpact of {word:?}: word occurs in no document"
        )));
    }
    Ok(with_word_high as f64 / with_word as f64)
}

/// Share of in-scope papers that are highly cited.
pub fn p_high(docs: &[Document], pub_years: &BTreeSet<i32>, high: &BTreeSet<String>) -> Result<f64> {
    let scoped: Vec<&Document> = docs
        .iter()
        .filter(|d| pub_years.contains(&d.pub_year))
        .collect();
    if scoped.is_empty() {
        return Err(Error::InvalidInput("p_high: empty scope".into()));
    }
    let n_high = scoped.iter().filter(|d| high.contains(&d.doi)).count();
    Ok(n_high as f64 / scoped.len() as f64)
}

/// Precomputed per-word (document count, highly-cited document count) for
/// repeated ActImpact lookups.
#[derive(Debug, Clone, Default)]
pub struct ImpactIndex {
    counts: HashMap<String, (usize, usize)>,
}

impl ImpactIndex {
    pub fn new(docs: &[Document], high: &BTreeSet<String>) -> Self {
        let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
        for d in docs {
            let is_high = high.contains(&d.doi);
            let distinct: HashSet<&str> = d.tokens.iter().map(String::as_str).collect();
            for w in distinct {
                let e = counts.entry(w.to_string()).or_default();
                e.0 += 1;
                e.1 += usize::from(is_high);
            }
        }
        ImpactIndex { counts }
    }

    pub fn act_impact(&self, word: &str) -> Option<f64> {
        self.counts
            .get(word)
            .map(|&(n, h)| h as f64 / n as f64)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Citations;
    use proptest::prelude::*;

    fn doc(doi: &str, tokens: &[&str], year: i32, cites: u64) -> Document {
        let mut citations = Citations::new();
        citations.insert(2021, cites);
        Document {
            doi: doi.into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            pub_year: year,
            citations,
        }
    }

    fn corpus(counts: &[u64]) -> Vec<Document> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| doc(&format!("d{i}"), &["w"], 2020, c))
            .collect()
    }

    #[test]
    fn labeled_doc_json_round_trip_keeps_citation_years() {
        let l = LabeledDoc {
            doc: doc("d", &["a", "b"], 2020, 7),
            y: 1,
        };
        let line = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<LabeledDoc>(&line).unwrap(), l);
        assert!(serde_json::from_str::<LabeledDoc>(&line.replace("\"2021\"", "\"x\"")).is_err());
    }

    #[test]
    fn five_paper_example_has_one_high() {
        let docs = corpus(&[0, 1, 1, 1, 2]);
        let labels = derive_labels(&docs, &LabelSpec::new([2020], 2021)).unwrap();
        let ys: Vec<u8> = labels.iter().map(|l| l.y).collect();
        assert_eq!(ys, [0, 0, 0, 0, 1]);
        let h = highly_cited_set(&docs, &[2020].into(), 2021).unwrap();
        assert_eq!(h, BTreeSet::from(["d4".to_string()]));
    }

    #[test]
    fn even_median_and_ties() {
        let docs = corpus(&[0, 3]);
        let ys: Vec<u8> = derive_labels(&docs, &LabelSpec::new([2020], 2021))
            .unwrap()
            .iter()
            .map(|l| l.y)
            .collect();
        assert_eq!(ys, [0, 1]);

        let docs = corpus(&[4, 4, 4]);
        assert!(derive_labels(&docs, &LabelSpec::new([2020], 2021))
            .unwrap()
            .iter()
            .all(|l| l.y == 0));

        let h = highly_cited_set(&corpus(&[0, 1, 2, 3]), &[2020].into(), 2021).unwrap();
        assert_eq!(h, BTreeSet::from(["d2".to_string(), "d3".to_string()]));

        assert!(highly_cited_set(&corpus(&[7]), &[2020].into(), 2021)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn missing_citation_year_counts_zero_and_scope_filters() {
        let mut docs = corpus(&[5, 5]);
        docs[0].citations.clear();
        docs.push(doc("old", &["w"], 2010, 100));
        let labels = derive_labels(&docs, &LabelSpec::new([2020], 2021)).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].y, 0);
        assert_eq!(labels[1].y, 1);
        assert!(derive_labels(&docs, &LabelSpec::new([1999], 2021)).is_err());
        assert!(derive_labels(&[], &LabelSpec::new([2020], 2021)).is_err());
    }

    #[test]
    fn act_impact_ratio() {
        let docs = vec![
            doc("a", &["x", "x"], 2020, 0),
            doc("b", &["x"], 2020, 0),
            doc("c", &["x", "y"], 2020, 0),
            doc("d", &["x"], 2020, 0),
        ];
        let high = BTreeSet::from(["a".to_string(), "c".to_string()]);
        assert_eq!(act_impact("x", &docs, &high).unwrap(), 0.5);
        assert_eq!(act_impact("y", &docs, &high).unwrap(), 1.0);
        assert!(matches!(
            act_impact("z", &docs, &high),
            Err(Error::Undefined(_))
        ));
        let idx = ImpactIndex::new(&docs, &high);
        assert_eq!(idx.act_impact("x"), Some(0.5));
        assert_eq!(idx.act_impact("z"), None);
    }

    #[test]
    fn p_high_bounds() {
        let docs = corpus(&[0, 1, 2, 3]);
        let years = BTreeSet::from([2020]);
        let all: BTreeSet<String> = docs.iter().map(|d| d.doi.clone()).collect();
        assert_eq!(p_high(&docs, &years, &all).unwrap(), 1.0);
        assert_eq!(p_high(&docs, &years, &BTreeSet::new()).unwrap(), 0.0);
        assert!(p_high(&docs, &BTreeSet::from([1990]), &all).is_err());
    }

    proptest! {
        #[test]
        fn balance_and_permutation_invariance(
            counts in proptest::collection::vec(0u64..6, 1..40),
            rot in 0usize..40,
        ) {
            let docs = corpus(&counts);
            let spec = LabelSpec::new([2020], 2021);
            let labels = derive_labels(&docs, &spec).unwrap();
            let high = labels.iter().filter(|l| l.y == 1).count() as i64;
            let low = labels.len() as i64 - high;
            let med = median(&counts).unwrap();
            let tied = counts.iter().filter(|&&c| c as f64 == med).count() as i64;
            let n = counts.len() as i64;
            // strictly above or strictly below the median: at most half each
            prop_assert!(high <= n / 2);
            prop_assert!(low - tied <= n / 2);
            if tied == 0 {
                prop_assert_eq!(high, low);
            }

            let mut rotated = docs.clone();
            rotated.rotate_left(rot % docs.len());
            let relabeled = derive_labels(&rotated, &spec).unwrap();
            for l in relabeled {
                let orig = labels.iter().find(|o| o.doc.doi == l.doc.doi).unwrap();
                prop_assert_eq!(orig.y, l.y);
            }
        }
    }
}
