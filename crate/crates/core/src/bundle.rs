//! A trained model directory: LDA files, relation matrix files and a copy of
//! the training corpus under `corpus/`, so matching needs nothing else.

use std::path::Path;

use crate::corpus::{Corpus, PullRequest};
use crate::error::Result;
use crate::inference::{fold_in, TopicDistribution};
use crate::lda::{self, LdaConfig, LdaModel, TrainTrace};
use crate::matcher::{match_pr, MatchResult};
use crate::relation::{self, RelationMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub lda: LdaModel,
    pub relation: RelationMatrix,
    pub corpus: Corpus,
}

impl ModelBundle {
    pub fn train(corpus: Corpus, cfg: &LdaConfig) -> Result<(Self, TrainTrace)> {
        let (lda, trace) = lda::train_with_trace(&corpus, cfg)?;
        let relation = relation::build(&lda, &corpus)?;
        Ok((ModelBundle { lda, relation, corpus }, trace))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.lda.save(dir)?;
        self.relation.save(dir)?;
        self.corpus.save(&dir.join("corpus"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let lda = LdaModel::load(dir)?;
        let relation = RelationMatrix::load(dir)?;
        let corpus = Corpus::load(&dir.join("corpus"))?;
        lda.check_vocab(&corpus.vocab_hash())?;
        Ok(ModelBundle { lda, relation, corpus })
    }

    pub fn topic_distribution(&self, pr: &PullRequest) -> Result<TopicDistribution> {
        fold_in(pr, &self.lda, &self.corpus.vocabulary, &self.corpus.prep)
    }

    pub fn match_pr(&self, pr: &PullRequest, tie_tolerance: f64) -> Result<MatchResult> {
        match_pr(&self.topic_distribution(pr)?, &self.relation, tie_tolerance)
    }
}
