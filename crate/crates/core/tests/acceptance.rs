//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines show up in `cargo test` output; exits nonzero if any fails.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smer_core::corpus::{preprocess, Document, PipelineConfig};
use smer_core::embedding::{train_skipgram, EmbeddingModel, SkipgramConfig};
use smer_core::eval::{self, SplitSpec};
use smer_core::models::{
    self, bow_vectorize, logistic, score_abstract, EmbeddingPredictor, FeatureSpace, Fit,
    LinearClassifier, TrainConfig,
};
use smer_core::smer::{self, cscore_display};
use smer_core::synth::{self, SynthConfig, SynthCorpus};
use smer_core::targets::{derive_labels, highly_cited_set, LabelSpec, LabeledDoc};
use smer_core::xai::{self, GaleMode, GlobalImportance, ImportanceMethod, LimeConfig};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_model(rng: &mut ChaCha8Rng, vocab: usize, dim: usize) -> EmbeddingModel {
    let words: Vec<String> = (0..vocab).map(|i| format!("w{i:05}")).collect();
    let vectors: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    EmbeddingModel::new(words, vectors, dim).unwrap()
}

fn random_classifier(rng: &mut ChaCha8Rng, dim: usize) -> LinearClassifier {
    LinearClassifier::new(
        FeatureSpace::Embedding {
            dim,
            embedding_sha256: None,
        },
        rng.gen_range(-1.0..1.0),
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn random_doc(rng: &mut ChaCha8Rng, model: &EmbeddingModel, len: usize, i: usize) -> Document {
    Document {
        doi: format!("r{i}"),
        tokens: (0..len)
            .map(|_| model.words()[rng.gen_range(0..model.len())].clone())
            .collect(),
        pub_year: 2020,
        citations: Default::default(),
    }
}

fn c1_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let model = random_model(&mut rng, 500, 50);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    let mut clf = random_classifier(&mut rng, 50);
    for i in 0..10_000 {
        if i % 100 == 99 {
            clf = random_classifier(&mut rng, 50);
        }
        let len = rng.gen_range(1..=200);
        let doc = random_doc(&mut rng, &model, len, i);
        let doc_logit = models::abstract_logit(&clf, &model, &doc).map_err(|e| e.to_string())?;
        let word_logits: Vec<f64> = doc
            .tokens
            .iter()
            .map(|t| smer::score_word(&clf, &model, t).map(|w| w.logit))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mean = word_logits.iter().sum::<f64>() / word_logits.len() as f64;
        let gap = (doc_logit - mean).abs() / (1.0 + doc_logit.abs());
        worst = worst.max(gap);
        if gap > 1e-9 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && elapsed < Duration::from_secs(10),
        format!("10000 docs, {violations} violations, worst relative gap {worst:.2e}, {elapsed:.2?} (< 10 s)"),
    )
}

fn c2_order_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let model = random_model(&mut rng, 10_000, 50);
    let clf = random_classifier(&mut rng, 50);
    let scored: Vec<(f64, f64)> = model
        .words()
        .iter()
        .map(|w| {
            let s = smer::score_word(&clf, &model, w).unwrap();
            (s.score(), s.logit)
        })
        .collect();
    let mut by_score: Vec<usize> = (0..scored.len()).collect();
    by_score.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0).then(a.cmp(&b)));
    let mut by_logit: Vec<usize> = (0..scored.len()).collect();
    by_logit.sort_by(|&a, &b| scored[a].1.total_cmp(&scored[b].1).then(a.cmp(&b)));
    let mismatches = by_score.iter().zip(&by_logit).filter(|(a, b)| a != b).count();

    let ranked = smer::rank_words(&clf, &model, None).unwrap();
    let ranked_sorted = ranked.windows(2).all(|w| w[0].logit >= w[1].logit);
    check(
        mismatches == 0 && ranked_sorted,
        format!("10000 words, {mismatches} rank positions differ; rank_words sorted by logit: {ranked_sorted}"),
    )
}

fn c3_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let model = random_model(&mut rng, 500, 50);
    let clf = random_classifier(&mut rng, 50);
    let (mut failures, mut nonzero) = (0, 0);
    for i in 0..10_000 {
        let len = rng.gen_range(1..=200);
        let doc = random_doc(&mut rng, &model, len, i);
        let k = rng.gen_range(0..len);
        let replacement = model.words()[rng.gen_range(0..model.len())].clone();
        if replacement != doc.tokens[k] {
            nonzero += 1;
        }
        if !smer::monotonicity_check(&clf, &model, &doc, k, &replacement).map_err(|e| e.to_string())? {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("10000 substitutions ({nonzero} with a different word), {failures} sign mismatches"),
    )
}

/// Small planted corpus shared by the BoW and objective checks.
fn small_labeled(seed: u64) -> Vec<LabeledDoc> {
    let corpus = synth::generate(&SynthConfig {
        docs_per_year: 200,
        years: vec![2020],
        background_size: 150,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let docs = preprocess_all(&corpus);
    derive_labels(&docs, &LabelSpec::new([2020], 2020)).unwrap()
}

fn c4_orc_identity() -> Outcome {
    let labeled = small_labeled(11);
    let fit = models::fit_bow_classifier(&labeled, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let clf = &fit.classifier;
    let dict = clf.bow_dictionary().map_err(|e| e.to_string())?;
    let bases: Vec<Vec<f64>> = vec![
        vec![0.0; dict.len()],
        bow_vectorize(&labeled[0].doc, &dict).as_f64(),
        bow_vectorize(&labeled[1].doc, &dict).as_f64(),
    ];
    let mut worst: f64 = 0.0;
    for k in 0..dict.len() {
        let orc = models::orc(clf, k).map_err(|e| e.to_string())?;
        for base in &bases {
            let mut off = base.clone();
            off[k] = 0.0;
            let mut on = base.clone();
            on[k] = 1.0;
            let ratio = clf.predict_odds(&on) / clf.predict_odds(&off);
            worst = worst.max((ratio / orc - 1.0).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("{} features x 3 base vectors, worst relative error {worst:.2e}", dict.len()),
    )
}

fn c5_five_papers() -> Outcome {
    let docs: Vec<Document> = [0u64, 1, 1, 1, 2]
        .iter()
        .enumerate()
        .map(|(i, &c)| Document {
            doi: format!("p{i}"),
            tokens: vec!["word".into()],
            pub_year: 2020,
            citations: [(2021, c)].into_iter().collect(),
        })
        .collect();
    let high = highly_cited_set(&docs, &BTreeSet::from([2020]), 2021).map_err(|e| e.to_string())?;
    check(high.len() == 1 && high.contains("p4"), format!("high set {high:?}"))
}

fn c6_cscore() -> Outcome {
    let rows = [(0.998, 1253, 1250), (0.972, 981, 954), (0.998, 714, 713)];
    let got: Vec<i64> = rows.iter().map(|&(s, n, _)| cscore_display(s, n)).collect();
    let want: Vec<i64> = rows.iter().map(|r| r.2).collect();
    check(got == want, format!("got {got:?}, expected {want:?}"))
}

fn preprocess_all(corpus: &SynthCorpus) -> Vec<Document> {
    let cfg = PipelineConfig::default();
    corpus
        .records
        .iter()
        .filter_map(|r| preprocess(r, &cfg).ok())
        .collect()
}

struct Planted {
    corpus: SynthCorpus,
    docs: Vec<Document>,
    train: Vec<LabeledDoc>,
    test: Vec<LabeledDoc>,
    model: EmbeddingModel,
    fit: Fit,
    label_years: BTreeSet<i32>,
    cit_year: i32,
    elapsed: Duration,
}

fn planted() -> Planted {
    let start = Instant::now();
    let corpus = synth::generate(&SynthConfig::default()).unwrap();
    let docs = preprocess_all(&corpus);
    let label_years: BTreeSet<i32> = [2018, 2019, 2020].into();
    let cit_year = 2020;
    let s = eval::split(&docs, &SplitSpec::random(label_years.iter().copied(), cit_year, 1)).unwrap();
    let model = train_skipgram(
        &docs,
        &SkipgramConfig {
            dim: 50,
            window: 5,
            ..SkipgramConfig::default()
        },
    )
    .unwrap();
    let fit = models::fit_embedding_classifier(&model, &s.train, &TrainConfig::default(), None).unwrap();
    Planted {
        corpus,
        docs,
        train: s.train,
        test: s.test,
        model,
        fit,
        label_years,
        cit_year,
        elapsed: start.elapsed(),
    }
}

fn c7_discrimination(p: &Planted) -> Outcome {
    let start = Instant::now();
    let clf = &p.fit.classifier;
    let scores: Vec<f64> = p
        .test
        .iter()
        .map(|l| score_abstract(clf, &p.model, &l.doc))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let labels: Vec<u8> = p.test.iter().map(|l| l.y).collect();
    let full = eval::auc(&scores, &labels).map_err(|e| e.to_string())?;
    let idx = eval::extreme10(&p.test, p.cit_year).map_err(|e| e.to_string())?;
    let ext = eval::auc(
        &idx.iter().map(|&i| scores[i]).collect::<Vec<_>>(),
        &idx.iter().map(|&i| labels[i]).collect::<Vec<_>>(),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = p.elapsed + start.elapsed();
    check(
        full >= 0.90 && ext >= full && elapsed < Duration::from_secs(120),
        format!(
            "{} train / {} test docs, AUC {full:.4} (>= 0.90), Extreme10% AUC {ext:.4} on {} docs, {elapsed:.2?} (< 2 min)",
            p.train.len(),
            p.test.len(),
            idx.len()
        ),
    )
}

fn c8_aopc(p: &Planted) -> Outcome {
    let clf = &p.fit.classifier;
    let predictor = EmbeddingPredictor::new(clf, &p.model).map_err(|e| e.to_string())?;
    let test_docs: Vec<Document> = p.test.iter().map(|l| l.doc.clone()).collect();
    let k = 10;
    let smer_rank = xai::smer_global(clf, &p.model, None).map_err(|e| e.to_string())?;
    let smer_curve = eval::aopc_global(&predictor, &test_docs, &smer_rank, k).map_err(|e| e.to_string())?;
    let random_rank = xai::random_importance(p.model.words(), 8).map_err(|e| e.to_string())?;
    let random_curve = eval::aopc_global(&predictor, &test_docs, &random_rank, k).map_err(|e| e.to_string())?;
    let random_max = random_curve
        .points
        .iter()
        .map(|pt| pt.mean_drop.abs())
        .fold(0.0, f64::max);

    let subset = &test_docs[..200.min(test_docs.len())];
    let mut lime_areas = Vec::new();
    for seed in 1..=5u64 {
        let cfg = LimeConfig {
            n_samples: 500,
            seed,
            ..LimeConfig::default()
        };
        let expls = xai::lime_explain_all(&predictor, subset, &cfg).map_err(|e| e.to_string())?;
        let glime = xai::gale_global(&expls, GaleMode::SumImportance).map_err(|e| e.to_string())?;
        lime_areas.push(
            eval::aopc_global(&predictor, &test_docs, &glime, k)
                .map_err(|e| e.to_string())?
                .area,
        );
    }
    let mut sorted = lime_areas.clone();
    sorted.sort_by(f64::total_cmp);
    let lime_median = sorted[2];
    check(
        smer_curve.area > random_curve.area + 0.05 && random_max < 0.02 && smer_curve.area >= lime_median,
        format!(
            "area SMER {:.4}, random {:.4} (max |drop| {random_max:.4} < 0.02), Global LIME median {lime_median:.4} over seeds {:?}",
            smer_curve.area,
            random_curve.area,
            lime_areas.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn c9_actimpact(p: &Planted) -> Outcome {
    let scope: Vec<Document> = p
        .docs
        .iter()
        .filter(|d| p.label_years.contains(&d.pub_year))
        .cloned()
        .collect();
    let high = highly_cited_set(&scope, &p.label_years, p.cit_year).map_err(|e| e.to_string())?;
    let index = smer_core::targets::ImpactIndex::new(&scope, &high);
    let truth = GlobalImportance::from_scores(
        ImportanceMethod::External,
        p.corpus.effects.iter().map(|(w, e)| (w.clone(), *e)),
    )
    .map_err(|e| e.to_string())?;
    let r_truth = eval::actimpact_correlation_indexed(&truth, &index, 100, 100)
        .map_err(|e| e.to_string())?
        .r;
    let vocab: Vec<String> = p.corpus.effects.keys().cloned().collect();
    let mut small = 0;
    for seed in 0..100 {
        let g = xai::random_importance(&vocab, seed).map_err(|e| e.to_string())?;
        let r = eval::actimpact_correlation_indexed(&g, &index, 100, 100)
            .map_err(|e| e.to_string())?
            .r;
        if r.abs() < 0.3 {
            small += 1;
        }
    }
    check(
        r_truth >= 0.8 && small >= 90,
        format!("planted effect r = {r_truth:.4} (>= 0.8); random |r| < 0.3 in {small}/100 seeds"),
    )
}

fn objective_non_increasing(objective: &[f64]) -> bool {
    objective.windows(2).all(|w| w[1] <= w[0])
}

fn c10_numerics(p: &Planted) -> Outcome {
    let line: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 / 10.0, i as f64 / 10.0)).collect();
    let area = eval::trapezoid_area(&line, true).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_sym: f64 = 0.0;
    for _ in 0..100_000 {
        let x: f64 = rng.gen_range(-40.0..40.0);
        worst_sym = worst_sym.max((logistic(-x) - (1.0 - logistic(x))).abs());
    }
    let half = logistic(0.0);

    let mut fits: Vec<(String, Vec<f64>)> = vec![("planted embedding LR".into(), p.fit.report.objective.clone())];
    let labeled = small_labeled(12);
    for lambda in [0.0, 0.1, 1.0, 100.0] {
        let cfg = TrainConfig {
            l2_lambda: lambda,
            max_iters: 2000,
            ..TrainConfig::default()
        };
        let fit = models::fit_bow_classifier(&labeled, &cfg).map_err(|e| e.to_string())?;
        fits.push((format!("BoW lambda={lambda}"), fit.report.objective));
        let fit = models::fit_embedding_classifier(&p.model, &p.train, &cfg, None).map_err(|e| e.to_string())?;
        fits.push((format!("embedding lambda={lambda}"), fit.report.objective));
    }
    let bad: Vec<&str> = fits
        .iter()
        .filter(|(_, o)| !objective_non_increasing(o))
        .map(|(n, _)| n.as_str())
        .collect();
    let iterations: usize = fits.iter().map(|(_, o)| o.len()).sum();
    check(
        area == 0.5 && half == 0.5 && worst_sym <= 1e-12 && bad.is_empty(),
        format!(
            "trapezoid area {area}, L(0) = {half}, max |L(-x) - (1 - L(x))| = {worst_sym:.1e}, {} fits / {iterations} objective values, increasing in {bad:?}",
            fits.len()
        ),
    )
}

fn c11_oov_generalization(p: &Planted) -> Outcome {
    let word = &p.corpus.emerging_word;
    let in_training = p.train.iter().any(|l| l.doc.contains(word));
    let in_vocab = p.model.contains(word);
    let score = smer::score_word(&p.fit.classifier, &p.model, word).map_err(|e| e.to_string())?;
    let s = score.score();
    check(
        !in_training && in_vocab && s > 0.0 && s < 1.0 && s.is_finite(),
        format!("{word:?}: in embedding vocab {in_vocab}, in classifier training docs {in_training}, SCORE {s:.4}"),
    )
}

fn main() {
    // `cargo test` passes harness flags; a filter that excludes this target
    // by name (or --list) should be honored.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return;
        }
    }

    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 perfect fidelity", c1_fidelity()),
        ("2 order preservation", c2_order_preservation()),
        ("3 monotonicity", c3_monotonicity()),
        ("4 ORC odds identity", c4_orc_identity()),
        ("5 target construction", c5_five_papers()),
        ("6 CScore arithmetic", c6_cscore()),
    ];
    let p = planted();
    results.push(("7 desk-scale discrimination", c7_discrimination(&p)));
    results.push(("8 AOPC ordering", c8_aopc(&p)));
    results.push(("9 ActImpact correlation", c9_actimpact(&p)));
    results.push(("10 numerics", c10_numerics(&p)));
    results.push(("11 OOV generalization", c11_oov_generalization(&p)));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    let words: HashSet<&str> = p.model.words().iter().map(String::as_str).collect();
    println!(
        "acceptance: {} passed, {failed} failed (planted corpus {} docs, {} embedding words)",
        results.len() - failed,
        p.docs.len(),
        words.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
