//! Collaborator x topic relation matrix and collaborator expertise.
//!
//! Relevance of collaborator `r` to topic `t` is the length-weighted mean of
//! P(t | d) over the documents `r` reviewed. Each collaborator's row is then
//! normalized over topics. Expertise is a collaborator's share of all review
//! labels, with one label per (collaborator, document) pair.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lda::LdaModel;
use crate::matrix::{write_csv_row, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct RelationMatrix {
    /// Row-normalized relevance, collaborators x topics.
    pub matrix: Matrix,
    /// Unnormalized relevance, collaborators x topics.
    pub raw_relevance: Matrix,
    pub expertise: Vec<f64>,
    pub roster: Vec<String>,
    pub k: usize,
}

fn check_model(model: &LdaModel, corpus: &Corpus) -> Result<()> {
    model.check_vocab(&corpus.vocab_hash())?;
    if model.num_docs() != corpus.len() {
        return Err(Error::DimensionMismatch {
            expected: model.num_docs(),
            found: corpus.len(),
        });
    }
    Ok(())
}

/// Corpus-level topic importance: theta averaged over documents, weighted by length.
pub fn topic_importance(model: &LdaModel, corpus: &Corpus) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::UnusableCorpus("topic importance of an empty corpus".into()));
    }
    check_model(model, corpus)?;
    let all: Vec<usize> = (0..corpus.len()).collect();
    Ok(weighted_theta(model, corpus, &all))
}

fn weighted_theta(model: &LdaModel, corpus: &Corpus, docs: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0; model.k()];
    let mut weight = 0.0;
    for &d in docs {
        let n = corpus.documents[d].n_words() as f64;
        for (a, p) in acc.iter_mut().zip(model.theta.row(d)) {
            *a += n * p;
        }
        weight += n;
    }
    acc.iter_mut().for_each(|a| *a /= weight);
    acc
}

/// Raw relevance of every roster collaborator to every topic.
pub fn relevance(model: &LdaModel, corpus: &Corpus) -> Result<Matrix> {
    check_model(model, corpus)?;
    let mut reviewed: Vec<Vec<usize>> = vec![Vec::new(); corpus.collaborators.len()];
    for (d, labels) in corpus.review_labels.iter().enumerate() {
        for &r in labels {
            reviewed[r].push(d);
        }
    }
    let mut raw = Matrix::zeros(corpus.collaborators.len(), model.k());
    for (r, docs) in reviewed.iter().enumerate() {
        if docs.is_empty() {
            return Err(Error::NoReviews(corpus.collaborators[r].clone()));
        }
        raw.row_mut(r).copy_from_slice(&weighted_theta(model, corpus, docs));
    }
    Ok(raw)
}

/// Divide every row by its sum.
pub fn normalize(raw: &Matrix) -> Result<Matrix> {
    let mut out = raw.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::ZeroRow(r));
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}

/// Each collaborator's share of all (collaborator, document) review labels.
pub fn compute_expertise(corpus: &Corpus) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; corpus.collaborators.len()];
    for labels in &corpus.review_labels {
        for &r in labels {
            counts[r] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoLabels);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

pub fn build(model: &LdaModel, corpus: &Corpus) -> Result<RelationMatrix> {
    let raw_relevance = relevance(model, corpus)?;
    let matrix = normalize(&raw_relevance)?;
    let expertise = compute_expertise(corpus)?;
    Ok(RelationMatrix {
        matrix,
        raw_relevance,
        expertise,
        roster: corpus.collaborators.clone(),
        k: model.k(),
    })
}

#[derive(Serialize, Deserialize)]
struct RelationMeta {
    k: usize,
    roster: Vec<String>,
    expertise: Vec<f64>,
}

impl RelationMatrix {
    pub fn validate(&self) -> Result<()> {
        let r = self.roster.len();
        for (m, name) in [(&self.matrix, "matrix"), (&self.raw_relevance, "raw relevance")] {
            if m.rows() != r || m.cols() != self.k {
                return Err(Error::Invariant(format!(
                    "{name} is {}x{}, expected {r}x{}",
                    m.rows(),
                    m.cols(),
                    self.k
                )));
            }
        }
        if self.expertise.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: self.expertise.len(),
            });
        }
        for (i, row) in self.matrix.iter_rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invariant(format!("relation row {i} sums to {sum}")));
            }
        }
        let sum: f64 = self.expertise.iter().sum();
        if self.expertise.iter().any(|&e| e < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Invariant(format!("expertise does not lie on the simplex (sum {sum})")));
        }
        Ok(())
    }

    /// CSV with a `collaborator` column followed by one column per topic index.
    pub fn to_csv(&self, normalized: bool) -> String {
        let m = if normalized { &self.matrix } else { &self.raw_relevance };
        let mut out = String::from("collaborator");
        for t in 0..self.k {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        for (name, row) in self.roster.iter().zip(m.iter_rows()) {
            out.push_str(name);
            out.push(',');
            write_csv_row(&mut out, row);
        }
        out
    }

    /// Writes `relation.json`, `relation.csv` and `relation_raw.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = RelationMeta {
            k: self.k,
            roster: self.roster.clone(),
            expertise: self.expertise.clone(),
        };
        let path = dir.join("relation.json");
        let json = serde_json::to_string_pretty(&meta).expect("relation meta serializes");
        fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
        self.matrix.write_csv(&dir.join("relation.csv"))?;
        self.raw_relevance.write_csv(&dir.join("relation_raw.csv"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("relation.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: RelationMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })?;
        let rm = RelationMatrix {
            matrix: Matrix::read_csv(&dir.join("relation.csv"))?,
            raw_relevance: Matrix::read_csv(&dir.join("relation_raw.csv"))?,
            expertise: meta.expertise,
            roster: meta.roster,
            k: meta.k,
        };
        rm.validate()?;
        Ok(rm)
    }
}
