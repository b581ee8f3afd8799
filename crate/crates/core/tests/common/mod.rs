#![allow(dead_code)]

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tima_core::corpus::Document;
use tima_core::{Corpus, LdaConfig, LdaModel, Matrix, PrepConfig, PullRequest, Vocabulary};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Corpus with `docs` documents of random length over `v` words. Every
/// collaborator reviews at least one document.
pub fn random_corpus(rng: &mut ChaCha8Rng, docs: usize, collaborators: usize, v: usize) -> Corpus {
    let vocabulary = Vocabulary::from_words((0..v).map(|i| format!("w{i:03}")).collect()).unwrap();
    let documents = (0..docs)
        .map(|d| Document {
            pr_id: format!("d{d}"),
            tokens: (0..rng.gen_range(1..=12)).map(|_| rng.gen_range(0..v as u32)).collect(),
        })
        .collect();
    let mut review_labels: Vec<Vec<usize>> = (0..docs).map(|_| Vec::new()).collect();
    let mut order: Vec<usize> = (0..docs).collect();
    order.shuffle(rng);
    for r in 0..collaborators {
        review_labels[order[r % docs]].push(r);
    }
    for labels in review_labels.iter_mut() {
        for r in 0..collaborators {
            if rng.gen_bool(0.3) {
                labels.push(r);
            }
        }
        if labels.is_empty() {
            labels.push(rng.gen_range(0..collaborators));
        }
        labels.sort_unstable();
        labels.dedup();
    }
    let corpus = Corpus {
        documents,
        vocabulary,
        collaborators: (0..collaborators).map(|r| format!("c{r}")).collect(),
        review_labels,
        prep: PrepConfig::default(),
    };
    corpus.validate().unwrap();
    corpus
}

/// A model with hand-fixed theta and phi for `corpus`.
pub fn fixed_model(corpus: &Corpus, theta: Vec<Vec<f64>>, phi: Vec<Vec<f64>>) -> LdaModel {
    let k = phi.len();
    LdaModel::from_parts(
        Matrix::from_rows(theta).unwrap(),
        Matrix::from_rows(phi).unwrap(),
        LdaConfig::with_topics(k.max(2)),
        corpus.vocab_hash(),
    )
    .unwrap()
}

pub const TOPIC_A: [&str; 10] = [
    "parser", "lexer", "grammar", "syntax", "bracket", "token", "ast", "quote", "escape", "literal",
];
pub const TOPIC_B: [&str; 10] = [
    "socket", "network", "timeout", "proxy", "packet", "latency", "router", "tcp", "handshake", "dns",
];

/// Two disjoint topics; topic-A PRs are reviewed by `a` only, topic-B PRs by `b` only.
/// PR i is closed on day i.
pub fn planted_prs(seed: u64, n: usize, words_per_pr: usize) -> Vec<PullRequest> {
    let mut rng = rng(seed);
    (0..n)
        .map(|i| {
            let (words, reviewer) = if rng.gen_bool(0.5) { (&TOPIC_A, "a") } else { (&TOPIC_B, "b") };
            let text: Vec<&str> = (0..words_per_pr).map(|_| *words.choose(&mut rng).unwrap()).collect();
            PullRequest {
                id: format!("{i:04}"),
                title: text.join(" "),
                description: String::new(),
                comments: vec![],
                submitter: "s".into(),
                reviewers: [reviewer.to_string()].into_iter().collect(),
                closed_at: Some(Utc.timestamp_opt(1_450_000_000 + 86_400 * i as i64, 0).unwrap()),
            }
        })
        .collect()
}
