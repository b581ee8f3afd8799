mod common;

use common::{planted_prs, TOPIC_A};
use tima_core::eval::{self, js_divergence, EvalOptions};
use tima_core::inference::{fold_in_counts, retrain_with_vocab, word_counts};
use tima_core::lda;
use tima_core::{build_corpus, LdaConfig, PrepConfig};

#[test]
fn recovers_two_planted_topics() {
    let prs = planted_prs(11, 100, 40);
    let (corpus, _) = build_corpus(&prs, &PrepConfig::default()).unwrap();
    let model = lda::train(&corpus, &LdaConfig::with_topics(2)).unwrap();

    let prep = PrepConfig::default();
    let half_a: Vec<usize> = TOPIC_A
        .iter()
        .map(|w| corpus.vocabulary.id(&prep.process(w)[0]).unwrap() as usize)
        .collect();
    let mass_a: Vec<f64> = (0..2)
        .map(|t| half_a.iter().map(|&w| model.phi.get(t, w)).sum())
        .collect();
    let (a_topic, b_topic) = if mass_a[0] > mass_a[1] { (0, 1) } else { (1, 0) };
    assert!(mass_a[a_topic] >= 0.9, "{mass_a:?}");
    assert!(1.0 - mass_a[b_topic] >= 0.9, "{mass_a:?}");
}

#[test]
fn planted_evaluation_is_precise() {
    let prs = planted_prs(12, 120, 30);
    let opts = EvalOptions {
        lda: LdaConfig::with_topics(2),
        ..EvalOptions::default()
    };
    let report = eval::run_evaluation(&prs, &opts).unwrap();
    assert!(report.mean_precision >= 0.9, "{}", report.mean_precision);
    assert_eq!(report.per_pr.len(), 12);
    assert_eq!(report, eval::run_evaluation(&prs, &opts).unwrap());
}

#[test]
fn log_likelihood_increases() {
    let prs = planted_prs(13, 60, 25);
    let (corpus, _) = build_corpus(&prs, &PrepConfig::default()).unwrap();
    let cfg = LdaConfig {
        iterations: 200,
        trace_every: 50,
        ..LdaConfig::with_topics(2)
    };
    let (_, trace) = lda::train_with_trace(&corpus, &cfg).unwrap();
    let (first_sweep, first) = trace.first().unwrap();
    let (last_sweep, last) = trace.last().unwrap();
    assert_eq!((first_sweep, last_sweep), (1, 200));
    assert!(last > first, "{first} -> {last}");
}

#[test]
fn fold_in_tracks_retraining_on_200_docs() {
    let prs = planted_prs(14, 200, 20);
    let (train, test) = eval::chronological_split(&prs, 0.1).unwrap();
    assert_eq!(test.len(), 20);
    let (corpus, _) = build_corpus(&train, &PrepConfig::default()).unwrap();
    let cfg = LdaConfig::with_topics(2);
    let (model, vocab, retrained) = retrain_with_vocab(&test, &corpus, &cfg).unwrap();
    let mut total = 0.0;
    for (pr, r) in test.iter().zip(&retrained) {
        let (counts, oov) = word_counts(&corpus.prep.process(&pr.text()), &vocab);
        let folded = fold_in_counts(&pr.id, &counts, oov, &model).unwrap();
        total += js_divergence(&folded.probs, &r.probs).unwrap();
    }
    let mean = total / test.len() as f64;
    assert!(mean.is_finite() && mean < 0.5, "{mean}");
}

#[test]
fn test_reviewed_by_everyone_scores_full_precision() {
    let mut prs = planted_prs(15, 40, 15);
    let last = prs.len() - 1;
    prs[last].reviewers = ["a".to_string(), "b".to_string()].into_iter().collect();
    let opts = EvalOptions {
        lda: LdaConfig {
            iterations: 100,
            ..LdaConfig::with_topics(2)
        },
        test_fraction: 0.025,
        ..EvalOptions::default()
    };
    let report = eval::run_evaluation(&prs, &opts).unwrap();
    assert_eq!(report.per_pr.len(), 1);
    assert_eq!(report.per_pr[0].precision, 1.0);
}
