//! Topic distributions for pull requests that were not part of training.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PullRequest, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{self, LdaConfig, LdaModel};
use crate::textprep::PrepConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub pr_id: String,
    pub probs: Vec<f64>,
    /// Tokens dropped because they are not in the training vocabulary.
    pub oov_count: usize,
}

impl TopicDistribution {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.probs.iter().sum();
        if self.probs.iter().any(|p| p.is_nan() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "topic distribution of {} sums to {sum}",
                self.pr_id
            )));
        }
        Ok(())
    }
}

/// Per-word counts of a preprocessed text, split into in-vocabulary counts and an OOV total.
pub fn word_counts(tokens: &[String], vocab: &Vocabulary) -> (BTreeMap<u32, usize>, usize) {
    let mut counts = BTreeMap::new();
    let mut oov = 0;
    for t in tokens {
        match vocab.id(t) {
            Some(id) => *counts.entry(id).or_insert(0) += 1,
            None => oov += 1,
        }
    }
    (counts, oov)
}

/// Mix the topic-word distributions by the document's word counts:
/// P(t | d) is proportional to sum over w of c(w, d) * P(w | t).
pub fn fold_in_counts(
    pr_id: &str,
    counts: &BTreeMap<u32, usize>,
    oov_count: usize,
    model: &LdaModel,
) -> Result<TopicDistribution> {
    if counts.is_empty() {
        return Err(Error::NoSignal {
            pr_id: pr_id.to_string(),
            oov_count,
        });
    }
    let mut probs: Vec<f64> = (0..model.k())
        .map(|t| {
            counts
                .iter()
                .map(|(&w, &c)| c as f64 * model.phi.get(t, w as usize))
                .sum()
        })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(TopicDistribution {
        pr_id: pr_id.to_string(),
        probs,
        oov_count,
    })
}

pub fn fold_in(
    new_pr: &PullRequest,
    model: &LdaModel,
    vocab: &Vocabulary,
    prep: &PrepConfig,
) -> Result<TopicDistribution> {
    model.check_vocab(&vocab.hash())?;
    let tokens = prep.process(&new_pr.text());
    let (counts, oov) = word_counts(&tokens, vocab);
    fold_in_counts(&new_pr.id, &counts, oov, model)
}

/// Train a fresh model on the corpus plus the new pull requests and return the
/// new documents' theta rows. New words extend the vocabulary after the
/// existing ids.
pub fn retrain_with(
    new_prs: &[PullRequest],
    corpus: &Corpus,
    cfg: &LdaConfig,
) -> Result<(LdaModel, Vec<TopicDistribution>)> {
    retrain_with_vocab(new_prs, corpus, cfg).map(|(model, _, dists)| (model, dists))
}

/// [`retrain_with`], also returning the extended vocabulary the model was trained on.
pub fn retrain_with_vocab(
    new_prs: &[PullRequest],
    corpus: &Corpus,
    cfg: &LdaConfig,
) -> Result<(LdaModel, Vocabulary, Vec<TopicDistribution>)> {
    let mut words = corpus.vocabulary.words().to_vec();
    let mut index: HashMap<String, u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();

    let mut new_docs = Vec::with_capacity(new_prs.len());
    for pr in new_prs {
        let tokens = corpus.prep.process(&pr.text());
        if tokens.is_empty() {
            return Err(Error::NoSignal {
                pr_id: pr.id.clone(),
                oov_count: 0,
            });
        }
        let ids: Vec<u32> = tokens
            .into_iter()
            .map(|t| {
                *index.entry(t.clone()).or_insert_with(|| {
                    words.push(t);
                    (words.len() - 1) as u32
                })
            })
            .collect();
        new_docs.push(ids);
    }
    let vocabulary = Vocabulary::from_words(words)?;

    let mut rows = corpus.token_rows();
    rows.extend(new_docs.iter().map(Vec::as_slice));
    let (model, _) = lda::train_tokens(&rows, vocabulary.len(), vocabulary.hash(), cfg)?;

    let offset = corpus.len();
    let dists = new_prs
        .iter()
        .enumerate()
        .map(|(i, pr)| TopicDistribution {
            pr_id: pr.id.clone(),
            probs: model.theta.row(offset + i).to_vec(),
            oov_count: 0,
        })
        .collect();
    Ok((model, vocabulary, dists))
}
