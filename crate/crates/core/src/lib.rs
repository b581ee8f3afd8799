//! Topic-based integrator matching for pull requests.
//!
//! The pipeline learns a collaborator x topic relation matrix from a project's
//! closed pull requests and recommends integrators for incoming ones:
//!
//! 1. [`corpus`]: ingest PR records and build a preprocessed, labeled corpus
//!    (text cleaning lives in [`textprep`]).
//! 2. [`lda`]: fit topics with a collapsed Gibbs sampler.
//! 3. [`relation`]: derive the relation matrix and collaborator expertise.
//! 4. [`inference`]: fold a new PR into the trained topics.
//! 5. [`matcher`]: pick the best-scoring collaborators for the PR's top topics.
//!
//! [`eval`] scores the whole pipeline on a chronological hold-out.

pub mod bundle;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod github;
pub mod inference;
pub mod lda;
pub mod matcher;
pub mod matrix;
pub mod relation;
pub mod textprep;

pub use bundle::ModelBundle;
pub use corpus::{build_corpus, ingest_jsonl, BuildSummary, Corpus, Document, PullRequest, Vocabulary};
pub use error::{Error, Result};
pub use eval::{EvalOptions, EvalReport};
pub use inference::{fold_in, TopicDistribution};
pub use lda::{LdaConfig, LdaModel};
pub use matcher::{match_batch, match_pr, MatchResult};
pub use matrix::Matrix;
pub use relation::RelationMatrix;
pub use textprep::{porter_stem, PrepConfig};
