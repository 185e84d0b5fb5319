//! Planted synthetic corpus with a known word-level signal.
//!
//! Each document belongs to a hidden class. A class-specific share of its
//! tokens comes from a small "cluster" vocabulary (a tenth of those from the
//! other class's cluster, as token noise); the rest are background words
//! whose sampling weights lean mildly toward one class. Citation counts put
//! every class-1 paper above every class-0 paper in every year, and grow with
//! the cluster share, so median-split labels recover the hidden class and the
//! most and least cited papers carry the clearest signal.
//!
//! The planted effect of a word is the analytic log ratio of its expected
//! token frequency under the two classes.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::RawRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Documents per publication year; rounded up to an even number so each
    /// cohort is exactly balanced.
    pub docs_per_year: usize,
    pub years: Vec<i32>,
    pub cluster_size: usize,
    pub background_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Range of the per-document share of cluster tokens.
    pub cluster_share: (f64, f64),
    /// Fraction of cluster tokens drawn from the opposite class's cluster.
    pub noise: f64,
    /// Strength of the background words' class lean.
    pub background_strength: f64,
    /// Share of latest-year documents that contain the emerging word.
    pub emerging_share: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs_per_year: 800,
            years: vec![2018, 2019, 2020, 2021],
            cluster_size: 10,
            background_size: 600,
            min_len: 30,
            max_len: 60,
            cluster_share: (0.05, 0.25),
            noise: 0.1,
            background_strength: 0.1,
            emerging_share: 0.3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub records: Vec<RawRecord>,
    /// Hidden class of each record, by doi.
    pub classes: BTreeMap<String, u8>,
    /// Planted log frequency ratio (class 1 over class 0) of every word.
    pub effects: BTreeMap<String, f64>,
    pub positive_words: Vec<String>,
    pub negative_words: Vec<String>,
    /// Word that appears only in the latest publication year.
    pub emerging_word: String,
}

impl SynthCorpus {
    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        crate::io::to_jsonl(&self.records)
    }
}

pub const EMERGING_WORD: &str = "novavirin";

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Pronounceable, collision-free word for an index.
fn syllable_word(mut i: usize) -> String {
    let mut w = String::new();
    for _ in 0..3 {
        w.push_str(ONSETS[i % ONSETS.len()]);
        i /= ONSETS.len();
        w.push_str(VOWELS[i % VOWELS.len()]);
        i /= VOWELS.len();
    }
    w
}

fn validate(cfg: &SynthConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidInput(format!("synthetic corpus: {m}")));
    if cfg.years.is_empty() || cfg.docs_per_year < 2 {
        return bad("need at least one year and two documents per year");
    }
    if cfg.cluster_size == 0 || cfg.background_size == 0 {
        return bad("empty vocabulary");
    }
    if cfg.background_size > 60 * 60 * 60 {
        return bad("background vocabulary too large");
    }
    if cfg.min_len == 0 || cfg.min_len > cfg.max_len {
        return bad("invalid length range");
    }
    let (lo, hi) = cfg.cluster_share;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return bad("cluster share must be a subrange of [0, 1]");
    }
    if !(0.0..=1.0).contains(&cfg.noise) || !(0.0..=1.0).contains(&cfg.emerging_share) {
        return bad("noise and emerging share must be in [0, 1]");
    }
    Ok(())
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let positive_words: Vec<String> = (0..cfg.cluster_size).map(|i| format!("pos{i:02}")).collect();
    let negative_words: Vec<String> = (0..cfg.cluster_size).map(|i| format!("neg{i:02}")).collect();
    let background: Vec<String> = (0..cfg.background_size).map(syllable_word).collect();
    let lean: Vec<f64> = background.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();

    let bg_weights = |sign: f64| -> Vec<f64> {
        lean.iter()
            .map(|a| (sign * cfg.background_strength * a).exp())
            .collect()
    };
    let bg_pos = bg_weights(1.0);
    let bg_neg = bg_weights(-1.0);
    let bg_dist = [
        WeightedIndex::new(&bg_neg).expect("positive weights"),
        WeightedIndex::new(&bg_pos).expect("positive weights"),
    ];

    // analytic expected token frequencies under each class
    let mean_share = (cfg.cluster_share.0 + cfg.cluster_share.1) / 2.0;
    let own = mean_share * (1.0 - cfg.noise) / cfg.cluster_size as f64;
    let other = mean_share * cfg.noise / cfg.cluster_size as f64;
    let mut effects = BTreeMap::new();
    for w in &positive_words {
        effects.insert(w.clone(), (own / other).ln());
    }
    for w in &negative_words {
        effects.insert(w.clone(), (other / own).ln());
    }
    let (zp, zn): (f64, f64) = (bg_pos.iter().sum(), bg_neg.iter().sum());
    for (i, w) in background.iter().enumerate() {
        effects.insert(w.clone(), (bg_pos[i] / zp).ln() - (bg_neg[i] / zn).ln());
    }
    effects.insert(EMERGING_WORD.to_string(), 0.0);

    let per_year = cfg.docs_per_year + cfg.docs_per_year % 2;
    let last_year = *cfg.years.iter().max().unwrap();
    let mut records = Vec::new();
    let mut classes = BTreeMap::new();
    for &year in &cfg.years {
        let mut year_classes: Vec<u8> = (0..per_year).map(|i| (i % 2) as u8).collect();
        year_classes.shuffle(&mut rng);
        for (i, &c) in year_classes.iter().enumerate() {
            let doi = format!("10.5555/synth.{year}.{i:05}");
            let share = rng.gen_range(cfg.cluster_share.0..=cfg.cluster_share.1);
            let len = rng.gen_range(cfg.min_len..=cfg.max_len);
            let (own_cluster, other_cluster) = if c == 1 {
                (&positive_words, &negative_words)
            } else {
                (&negative_words, &positive_words)
            };
            let mut tokens: Vec<&str> = Vec::with_capacity(len + 1);
            for _ in 0..len {
                let t = if rng.gen_bool(share) {
                    let cluster = if rng.gen_bool(cfg.noise) { other_cluster } else { own_cluster };
                    cluster[rng.gen_range(0..cluster.len())].as_str()
                } else {
                    background[bg_dist[c as usize].sample(&mut rng)].as_str()
                };
                tokens.push(t);
            }
            if year == last_year && rng.gen_bool(cfg.emerging_share) {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, EMERGING_WORD);
            }
            let text = render(&tokens, &mut rng);
            let citations = citation_history(c, share, cfg, year, &mut rng);
            classes.insert(doi.clone(), c);
            records.push(RawRecord {
                doi,
                abstract_text: text,
                pub_year: year,
                citations,
            });
        }
    }
    Ok(SynthCorpus {
        records,
        classes,
        effects,
        positive_words,
        negative_words,
        emerging_word: EMERGING_WORD.to_string(),
    })
}

/// Yearly citations from the publication year to one year past the last
/// cohort. Class 0 stays within 0..=5 and class 1 starts at 6; within a
/// class, a larger cluster share means more extreme counts.
fn citation_history(
    c: u8,
    share: f64,
    cfg: &SynthConfig,
    year: i32,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<i32, u64> {
    let (lo, hi) = cfg.cluster_share;
    let strength = if hi > lo { (share - lo) / (hi - lo) } else { 0.5 };
    let last = cfg.years.iter().max().unwrap() + 1;
    (year..=last)
        .map(|y| {
            let jitter: f64 = rng.gen_range(0.0..1.0);
            let n = if c == 1 {
                6 + (20.0 * strength + 3.0 * jitter).round() as u64
            } else {
                (5.0 * (1.0 - strength) * (0.8 + 0.2 * jitter)).round() as u64
            };
            (y, n)
        })
        .collect()
}

/// Sentence-like text: capitalized sentences, commas, and the occasional
/// number, all of which preprocessing strips again.
fn render(tokens: &[&str], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut start = true;
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if start {
            let mut chars = t.chars();
            if let Some(f) = chars.next() {
                out.extend(f.to_uppercase());
                out.push_str(chars.as_str());
            }
            start = false;
        } else {
            out.push_str(t);
        }
        let r: f64 = rng.gen();
        if r < 0.08 {
            out.push_str(&format!(" ({}%)", rng.gen_range(1..100)));
        } else if r < 0.16 {
            out.push(',');
        } else if r < 0.26 {
            out.push('.');
            start = true;
        }
    }
    out.push('.');
    out
}

/// Words of a corpus's vocabulary that occur in the given records.
pub fn vocabulary(corpus: &SynthCorpus) -> BTreeSet<String> {
    corpus.effects.keys().cloned().collect()
}
