//! Pull-request records, corpus construction and on-disk corpus layout.
//!
//! A corpus directory holds four files:
//!
//! * `meta.json`: document ids, collaborator roster, preprocessing config, hashes
//! * `vocab.txt`: one word per line, the zero-based line number is the word id
//! * `docs.txt`: one space-separated row of word ids per document
//! * `labels.txt`: one space-separated row of roster indices per document

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textprep::PrepConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequest {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub comments: Vec<String>,
    #[serde(default)]
    pub submitter: String,
    #[serde(default)]
    pub reviewers: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<DateTime<Utc>>,
}

impl PullRequest {
    /// Title, description, then comments, newline separated.
    pub fn text(&self) -> String {
        let mut parts = Vec::with_capacity(2 + self.comments.len());
        parts.push(self.title.as_str());
        parts.push(self.description.as_str());
        parts.extend(self.comments.iter().map(String::as_str));
        parts.join("\n")
    }

    /// A PR needs at least one reviewer to be used for training.
    pub fn is_labeled(&self) -> bool {
        !self.reviewers.is_empty()
    }
}

/// Read a JSONL file of closed pull requests. Every record must carry `closed_at`.
///
/// Records without reviewers are kept and logged; they are skipped later by
/// [`build_corpus`].
pub fn ingest_jsonl(path: &Path) -> Result<Vec<PullRequest>> {
    let prs = read_jsonl(path, true)?;
    for pr in prs.iter().filter(|pr| !pr.is_labeled()) {
        log::warn!("pull request {} has no reviewers; it will not be used for training", pr.id);
    }
    Ok(prs)
}

/// Read a JSONL file of incoming pull requests, where `closed_at` and
/// `reviewers` are optional.
pub fn read_incoming_jsonl(path: &Path) -> Result<Vec<PullRequest>> {
    read_jsonl(path, false)
}

/// Read a single pull request JSON object.
pub fn read_pr_json(path: &Path) -> Result<PullRequest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn read_jsonl(path: &Path, require_closed_at: bool) -> Result<Vec<PullRequest>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), require_closed_at)
}

pub fn parse_jsonl(reader: impl BufRead, require_closed_at: bool) -> Result<Vec<PullRequest>> {
    let mut seen = HashSet::new();
    let mut prs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let pr: PullRequest = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if require_closed_at && pr.closed_at.is_none() {
            return Err(Error::Parse {
                line: line_no,
                message: "missing field `closed_at`".into(),
            });
        }
        if !seen.insert(pr.id.clone()) {
            return Err(Error::DuplicateId(pr.id));
        }
        prs.push(pr);
    }
    Ok(prs)
}

pub fn write_jsonl(prs: &[PullRequest], path: &Path) -> Result<()> {
    let mut out = String::new();
    for pr in prs {
        out.push_str(&serde_json::to_string(pr).expect("PullRequest serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub pr_id: String,
    pub tokens: Vec<u32>,
}

impl Document {
    pub fn n_words(&self) -> usize {
        self.tokens.len()
    }
}

/// Bijection between word strings and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::UnusableCorpus(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// SHA-256 over the words in id order, newline separated.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    /// Sorted, deduplicated collaborator ids.
    pub collaborators: Vec<String>,
    /// Per document, sorted indices into `collaborators`.
    pub review_labels: Vec<Vec<usize>>,
    pub prep: PrepConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub input_prs: usize,
    /// PRs without reviewers, excluded from training.
    pub unreviewed: Vec<String>,
    /// PRs whose text was empty after preprocessing.
    pub dropped_empty: Vec<String>,
    pub documents: usize,
    pub collaborators: usize,
    pub vocabulary: usize,
}

/// Build a training corpus from labeled pull requests.
pub fn build_corpus(prs: &[PullRequest], prep: &PrepConfig) -> Result<(Corpus, BuildSummary)> {
    prep.validate()?;
    let mut summary = BuildSummary {
        input_prs: prs.len(),
        ..BuildSummary::default()
    };

    let mut kept: Vec<(&PullRequest, Vec<String>)> = Vec::new();
    for pr in prs {
        if !pr.is_labeled() {
            summary.unreviewed.push(pr.id.clone());
            continue;
        }
        let tokens = prep.process(&pr.text());
        if tokens.is_empty() {
            summary.dropped_empty.push(pr.id.clone());
            continue;
        }
        kept.push((pr, tokens));
    }
    if kept.is_empty() {
        return Err(Error::UnusableCorpus(format!(
            "no reviewed pull request has text left after preprocessing ({} input, {} unreviewed, {} empty)",
            prs.len(),
            summary.unreviewed.len(),
            summary.dropped_empty.len()
        )));
    }

    let words: BTreeSet<&str> = kept
        .iter()
        .flat_map(|(_, t)| t.iter().map(String::as_str))
        .collect();
    let vocabulary = Vocabulary::from_words(words.into_iter().map(str::to_string).collect())?;

    let collaborators: Vec<String> = kept
        .iter()
        .flat_map(|(pr, _)| pr.reviewers.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let roster_index: HashMap<&str, usize> = collaborators
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut documents = Vec::with_capacity(kept.len());
    let mut review_labels = Vec::with_capacity(kept.len());
    for (pr, tokens) in &kept {
        documents.push(Document {
            pr_id: pr.id.clone(),
            tokens: tokens
                .iter()
                .map(|t| vocabulary.id(t).expect("word collected above"))
                .collect(),
        });
        // reviewers is a BTreeSet, so indices come out sorted
        review_labels.push(pr.reviewers.iter().map(|r| roster_index[r.as_str()]).collect());
    }

    summary.documents = documents.len();
    summary.collaborators = collaborators.len();
    summary.vocabulary = vocabulary.len();
    let corpus = Corpus {
        documents,
        vocabulary,
        collaborators,
        review_labels,
        prep: prep.clone(),
    };
    corpus.validate()?;
    Ok((corpus, summary))
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusMeta {
    format_version: u32,
    documents: Vec<String>,
    collaborators: Vec<String>,
    vocab_size: usize,
    vocab_hash: String,
    stopwords_hash: String,
    prep: PrepConfig,
}

const FORMAT_VERSION: u32 = 1;

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(Document::n_words).sum()
    }

    pub fn vocab_hash(&self) -> String {
        self.vocabulary.hash()
    }

    pub fn token_rows(&self) -> Vec<&[u32]> {
        self.documents.iter().map(|d| d.tokens.as_slice()).collect()
    }

    /// Check the structural invariants of a training corpus.
    pub fn validate(&self) -> Result<()> {
        if self.documents.len() != self.review_labels.len() {
            return Err(Error::UnusableCorpus(format!(
                "{} documents but {} label rows",
                self.documents.len(),
                self.review_labels.len()
            )));
        }
        let v = self.vocabulary.len() as u32;
        let r = self.collaborators.len();
        if self.collaborators.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnusableCorpus("collaborator roster is not sorted and unique".into()));
        }
        let mut used = vec![false; r];
        for (doc, labels) in self.documents.iter().zip(&self.review_labels) {
            if doc.tokens.is_empty() {
                return Err(Error::UnusableCorpus(format!("document {} is empty", doc.pr_id)));
            }
            if let Some(t) = doc.tokens.iter().find(|&&t| t >= v) {
                return Err(Error::UnusableCorpus(format!(
                    "document {} has token id {t} outside vocabulary of {v}",
                    doc.pr_id
                )));
            }
            if labels.is_empty() {
                return Err(Error::UnusableCorpus(format!("document {} has no reviewer", doc.pr_id)));
            }
            for &l in labels {
                if l >= r {
                    return Err(Error::UnusableCorpus(format!(
                        "document {} has reviewer index {l} outside roster of {r}",
                        doc.pr_id
                    )));
                }
                used[l] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::NoReviews(self.collaborators[i].clone()));
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = CorpusMeta {
            format_version: FORMAT_VERSION,
            documents: self.documents.iter().map(|d| d.pr_id.clone()).collect(),
            collaborators: self.collaborators.clone(),
            vocab_size: self.vocabulary.len(),
            vocab_hash: self.vocab_hash(),
            stopwords_hash: self.prep.stopwords_hash(),
            prep: self.prep.clone(),
        };
        let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        write_file(&dir.join("meta.json"), format!("{meta_json}\n").as_bytes())?;

        let mut vocab = String::new();
        for w in self.vocabulary.words() {
            vocab.push_str(w);
            vocab.push('\n');
        }
        write_file(&dir.join("vocab.txt"), vocab.as_bytes())?;
        write_file(
            &dir.join("docs.txt"),
            rows_to_text(self.documents.iter().map(|d| d.tokens.iter())).as_bytes(),
        )?;
        write_file(
            &dir.join("labels.txt"),
            rows_to_text(self.review_labels.iter().map(|l| l.iter())).as_bytes(),
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: CorpusMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", meta_path.display()),
        })?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::UnusableCorpus(format!(
                "unsupported corpus format version {}",
                meta.format_version
            )));
        }

        let vocab_path = dir.join("vocab.txt");
        let vocab_text = fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let vocabulary = Vocabulary::from_words(vocab_text.lines().map(str::to_string).collect())?;
        if vocabulary.len() != meta.vocab_size || vocabulary.hash() != meta.vocab_hash {
            return Err(Error::VocabMismatch {
                expected: meta.vocab_hash,
                found: vocabulary.hash(),
            });
        }

        let docs: Vec<Vec<u32>> = read_rows(&dir.join("docs.txt"))?;
        let labels: Vec<Vec<usize>> = read_rows(&dir.join("labels.txt"))?;
        if docs.len() != meta.documents.len() {
            return Err(Error::UnusableCorpus(format!(
                "docs.txt has {} rows but meta.json lists {} documents",
                docs.len(),
                meta.documents.len()
            )));
        }
        let documents = meta
            .documents
            .into_iter()
            .zip(docs)
            .map(|(pr_id, tokens)| Document { pr_id, tokens })
            .collect();
        let corpus = Corpus {
            documents,
            vocabulary,
            collaborators: meta.collaborators,
            review_labels: labels,
            prep: meta.prep,
        };
        corpus.validate()?;
        Ok(corpus)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn rows_to_text<'a, T, I, R>(rows: R) -> String
where
    T: std::fmt::Display + 'a,
    I: Iterator<Item = &'a T>,
    R: Iterator<Item = I>,
{
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.map(ToString::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn read_rows<T: std::str::FromStr>(path: &Path) -> Result<Vec<Vec<T>>>
where
    T::Err: std::fmt::Display,
{
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|cell| {
                    cell.parse::<T>().map_err(|e| Error::Parse {
                        line: i + 1,
                        message: format!("{}: {e}", path.display()),
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn pr(id: &str, text: &str, reviewers: &[&str]) -> PullRequest {
        PullRequest {
            id: id.into(),
            title: text.into(),
            description: String::new(),
            comments: vec![],
            submitter: "submitter".into(),
            reviewers: reviewers.iter().map(|s| s.to_string()).collect(),
            closed_at: Some("2016-01-01T00:00:00Z".parse().unwrap()),
        }
    }

    #[test]
    fn parse_single_line() {
        let line = r#"{"id":"1","title":"fix crash","description":"","comments":[],"submitter":"u1","reviewers":["a"],"closed_at":"2016-01-01T00:00:00Z"}"#;
        let prs = parse_jsonl(line.as_bytes(), true).unwrap();
        assert_eq!(prs.len(), 1);
        assert_eq!(prs[0].title, "fix crash");
        assert_eq!(prs[0].reviewers, BTreeSet::from(["a".to_string()]));
        assert_eq!(prs[0].closed_at.unwrap().timestamp(), 1451606400);
    }

    #[test]
    fn parse_empty_input() {
        assert!(parse_jsonl("".as_bytes(), true).unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "{\"id\":\"1\",\"title\":\"a\",\"closed_at\":\"2016-01-01T00:00:00Z\"}\n\
                    {\"id\":\"1\",\"title\":\"b\",\"closed_at\":\"2016-01-02T00:00:00Z\"}\n";
        match parse_jsonl(text.as_bytes(), true) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "1"),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_names_line_number() {
        let text = "{\"id\":\"1\",\"title\":\"a\",\"closed_at\":\"2016-01-01T00:00:00Z\"}\n{not json\n";
        match parse_jsonl(text.as_bytes(), true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn closed_at_required_for_history() {
        let text = "{\"id\":\"1\",\"title\":\"a\"}\n";
        assert!(matches!(parse_jsonl(text.as_bytes(), true), Err(Error::Parse { line: 1, .. })));
        assert_eq!(parse_jsonl(text.as_bytes(), false).unwrap().len(), 1);
    }

    #[test]
    fn two_prs_give_sorted_roster() {
        let prs = vec![pr("1", "parser crash", &["a"]), pr("2", "network timeout", &["b", "a"])];
        let (corpus, summary) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        assert_eq!(corpus.collaborators, vec!["a", "b"]);
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.review_labels, vec![vec![0], vec![0, 1]]);
        assert_eq!(summary.documents, 2);
    }

    #[test]
    fn stopword_only_pr_is_dropped_and_reported() {
        let prs = vec![pr("1", "the it and on", &["a"]), pr("2", "parser crash", &["a"])];
        let (corpus, summary) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(summary.dropped_empty, vec!["1"]);
    }

    #[test]
    fn shared_stems_share_vocabulary() {
        let prs = vec![
            pr("1", "fix parser bug", &["a"]),
            pr("2", "fixing the parser", &["a"]),
            pr("3", "add network retry", &["b"]),
        ];
        let (corpus, _) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        assert_eq!(
            corpus.vocabulary.words(),
            &["add", "bug", "fix", "network", "parser", "retri"]
        );
        assert_eq!(corpus.documents[0].tokens, vec![2, 4, 1]);
        assert_eq!(corpus.documents[1].tokens, vec![2, 4]);
    }

    #[test]
    fn unreviewed_prs_excluded_from_training() {
        let prs = vec![pr("1", "parser crash", &[]), pr("2", "network timeout", &["b"])];
        let (corpus, summary) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(summary.unreviewed, vec!["1"]);
        assert_eq!(corpus.collaborators, vec!["b"]);
    }

    #[test]
    fn all_empty_is_unusable() {
        let prs = vec![pr("1", "the and", &["a"]), pr("2", "parser", &[])];
        assert!(matches!(
            build_corpus(&prs, &PrepConfig::default()),
            Err(Error::UnusableCorpus(_))
        ));
        assert!(matches!(build_corpus(&[], &PrepConfig::default()), Err(Error::UnusableCorpus(_))));
    }

    #[test]
    fn roster_only_counts_surviving_documents() {
        let prs = vec![pr("1", "the and", &["ghost"]), pr("2", "parser", &["a"])];
        let (corpus, _) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        assert_eq!(corpus.collaborators, vec!["a"]);
    }

    #[test]
    fn save_load_round_trip() {
        let prs = vec![
            pr("1", "fix parser bug", &["a"]),
            pr("2", "fixing the parser", &["a", "c"]),
            pr("3", "add network retry", &["b"]),
        ];
        let (corpus, _) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.save(dir.path()).unwrap();
        let loaded = Corpus::load(dir.path()).unwrap();
        assert_eq!(loaded, corpus);
        let docs = fs::read_to_string(dir.path().join("docs.txt")).unwrap();
        assert_eq!(docs.lines().count(), 3);
    }

    #[test]
    fn load_rejects_out_of_range_tokens() {
        let prs = vec![pr("1", "parser crash", &["a"])];
        let (corpus, _) = build_corpus(&prs, &PrepConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.save(dir.path()).unwrap();
        fs::write(dir.path().join("docs.txt"), "0 7\n").unwrap();
        assert!(matches!(Corpus::load(dir.path()), Err(Error::UnusableCorpus(_))));
    }
}
