//! Integrator matching.
//!
//! For each topic tied for the maximum of a PR's topic distribution, every
//! collaborator maximizing `matrix(r, k) * expertise(r)` becomes a candidate.
//! Ties on both levels are resolved with a relative tolerance so that the
//! multi-winner behavior does not depend on bit-exact float equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::TopicDistribution;
use crate::matrix::Matrix;
use crate::relation::RelationMatrix;

pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub pr_id: String,
    /// Topic indices tied for the distribution maximum, ascending.
    pub top_topics: Vec<usize>,
    /// Topics x collaborators table of `matrix(r, k) * expertise(r)`.
    pub scores: Matrix,
    /// Candidate collaborator ids in roster order.
    pub candidates: Vec<String>,
    pub tie_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScore {
    pub collaborator: String,
    pub score: f64,
}

impl MatchResult {
    /// Collaborators ordered by their best score over the top topics, highest first.
    /// Equal scores keep roster order.
    pub fn ranked(&self, roster: &[String]) -> Vec<RankedScore> {
        let mut ranked: Vec<RankedScore> = roster
            .iter()
            .enumerate()
            .map(|(r, name)| RankedScore {
                collaborator: name.clone(),
                score: self
                    .top_topics
                    .iter()
                    .map(|&k| self.scores.get(k, r))
                    .fold(f64::NEG_INFINITY, f64::max),
            })
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
        ranked
    }
}

/// Indices whose value is within relative `tolerance` of the maximum.
fn near_max(values: &[f64], tolerance: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = max - tolerance * max.abs();
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= threshold)
        .map(|(i, _)| i)
        .collect()
}

pub fn match_pr(dist: &TopicDistribution, rm: &RelationMatrix, tie_tolerance: f64) -> Result<MatchResult> {
    if dist.probs.len() != rm.k {
        return Err(Error::DimensionMismatch {
            expected: rm.k,
            found: dist.probs.len(),
        });
    }
    if !(0.0..1.0).contains(&tie_tolerance) {
        return Err(Error::InvalidConfig(format!(
            "tie tolerance must be in [0, 1), got {tie_tolerance}"
        )));
    }
    let n = rm.roster.len();
    let mut scores = Matrix::zeros(rm.k, n);
    for k in 0..rm.k {
        for r in 0..n {
            scores.set(k, r, rm.matrix.get(r, k) * rm.expertise[r]);
        }
    }

    let top_topics = near_max(&dist.probs, tie_tolerance);
    let mut is_candidate = vec![false; n];
    for &k in &top_topics {
        for r in near_max(scores.row(k), tie_tolerance) {
            is_candidate[r] = true;
        }
    }
    let candidates = rm
        .roster
        .iter()
        .zip(&is_candidate)
        .filter(|(_, &c)| c)
        .map(|(name, _)| name.clone())
        .collect();
    Ok(MatchResult {
        pr_id: dist.pr_id.clone(),
        top_topics,
        scores,
        candidates,
        tie_tolerance,
    })
}

pub fn match_batch(
    dists: &[TopicDistribution],
    rm: &RelationMatrix,
    tie_tolerance: f64,
) -> Result<Vec<MatchResult>> {
    dists.iter().map(|d| match_pr(d, rm, tie_tolerance)).collect()
}
