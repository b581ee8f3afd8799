//! Python bindings.
//!
//! Pull requests cross the boundary as dicts (or JSON strings) with the same
//! fields as the JSONL input: `id`, `title`, `description`, `comments`,
//! `submitter`, `reviewers`, `closed_at`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;

use tima_core::eval::{self, EvalOptions};
use tima_core::matcher::DEFAULT_TIE_TOLERANCE;
use tima_core::{corpus, Corpus, Error, LdaConfig, MatchResult, ModelBundle, PrepConfig, PullRequest};

create_exception!(tima, TimaError, PyException);
create_exception!(tima, NoSignalError, TimaError);

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::DimensionMismatch { .. } | Error::InvalidDistribution(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::NoSignal { .. } => NoSignalError::new_err(e.to_string()),
        e => TimaError::new_err(e.to_string()),
    }
}

fn to_json_text(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(s.to_str()?.to_string());
    }
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn extract_pr(obj: &Bound<'_, PyAny>) -> PyResult<PullRequest> {
    serde_json::from_str(&to_json_text(obj)?).map_err(|e| PyValueError::new_err(format!("bad pull request: {e}")))
}

fn extract_prs(objs: &Bound<'_, PyAny>) -> PyResult<Vec<PullRequest>> {
    objs.try_iter()?.map(|o| extract_pr(&o?)).collect()
}

fn prep_config(stopwords: Option<PathBuf>, min_token_len: usize, keep_numeric: bool) -> PyResult<PrepConfig> {
    let mut cfg = match stopwords {
        Some(path) => PrepConfig::with_stopwords_file(&path).map_err(err)?,
        None => PrepConfig::default(),
    };
    cfg.min_token_len = min_token_len;
    cfg.drop_numeric = !keep_numeric;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn lda_config(k: usize, alpha: Option<f64>, beta: f64, iterations: usize, seed: u64) -> PyResult<LdaConfig> {
    let cfg = LdaConfig {
        alpha: alpha.unwrap_or(50.0 / k as f64),
        beta,
        iterations,
        seed,
        ..LdaConfig::with_topics(k)
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Porter stem of a single lowercase word.
#[pyfunction]
fn porter_stem(word: &str) -> String {
    tima_core::porter_stem(word)
}

/// Tokenize, drop stopwords and stem.
#[pyfunction]
#[pyo3(signature = (text, stopwords=None, min_token_len=2, keep_numeric=false))]
fn preprocess(text: &str, stopwords: Option<PathBuf>, min_token_len: usize, keep_numeric: bool) -> PyResult<Vec<String>> {
    Ok(prep_config(stopwords, min_token_len, keep_numeric)?.process(text))
}

#[pyfunction]
fn js_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    eval::js_divergence(&p, &q).map_err(err)
}

/// `(precision, recall)` of a match set against the core reviewers.
#[pyfunction]
fn precision_recall(core_reviewers: BTreeSet<String>, matched: BTreeSet<String>) -> PyResult<(f64, f64)> {
    eval::precision_recall(&core_reviewers, &matched).map_err(err)
}

/// Read a JSONL file of closed pull requests into a list of dicts.
#[pyfunction]
fn load_prs<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Vec<Bound<'py, PyAny>>> {
    corpus::ingest_jsonl(&path)
        .map_err(err)?
        .iter()
        .map(|pr| from_json(py, &serde_json::to_string(pr).expect("pull request serializes")))
        .collect()
}

/// Chronological hold-out evaluation. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (prs, k=15, alpha=None, beta=0.1, iterations=1000, seed=0, test_fraction=0.1, tie_tolerance=DEFAULT_TIE_TOLERANCE))]
#[allow(clippy::too_many_arguments)]
fn run_evaluation<'py>(
    py: Python<'py>,
    prs: &Bound<'py, PyAny>,
    k: usize,
    alpha: Option<f64>,
    beta: f64,
    iterations: usize,
    seed: u64,
    test_fraction: f64,
    tie_tolerance: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let prs = extract_prs(prs)?;
    let opts = EvalOptions {
        lda: lda_config(k, alpha, beta, iterations, seed)?,
        test_fraction,
        tie_tolerance,
        prep: PrepConfig::default(),
    };
    let report = py.detach(|| eval::run_evaluation(&prs, &opts)).map_err(err)?;
    from_json(py, &serde_json::to_string(&report).expect("report serializes"))
}

#[pyclass(name = "Corpus", module = "tima", frozen)]
struct PyCorpus {
    inner: Corpus,
    summary: Option<String>,
}

#[pymethods]
impl PyCorpus {
    /// Build a training corpus; PRs without reviewers or without usable text are left out.
    #[staticmethod]
    #[pyo3(signature = (prs, stopwords=None, min_token_len=2, keep_numeric=false))]
    fn build(prs: &Bound<'_, PyAny>, stopwords: Option<PathBuf>, min_token_len: usize, keep_numeric: bool) -> PyResult<Self> {
        let prep = prep_config(stopwords, min_token_len, keep_numeric)?;
        let (inner, summary) = corpus::build_corpus(&extract_prs(prs)?, &prep).map_err(err)?;
        Ok(PyCorpus {
            inner,
            summary: Some(serde_json::to_string(&summary).expect("summary serializes")),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCorpus {
            inner: Corpus::load(&path).map_err(err)?,
            summary: None,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Build counts as a dict, or None for a loaded corpus.
    #[getter]
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.summary.as_deref().map(|s| from_json(py, s)).transpose()
    }

    #[getter]
    fn collaborators(&self) -> Vec<String> {
        self.inner.collaborators.clone()
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.inner.vocabulary.words().to_vec()
    }

    #[getter]
    fn pr_ids(&self) -> Vec<String> {
        self.inner.documents.iter().map(|d| d.pr_id.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(documents={}, collaborators={}, vocabulary={})",
            self.inner.len(),
            self.inner.collaborators.len(),
            self.inner.vocabulary.len()
        )
    }
}

#[pyclass(name = "MatchResult", module = "tima", frozen, get_all)]
struct PyMatchResult {
    pr_id: String,
    top_topics: Vec<usize>,
    candidates: Vec<String>,
    /// `(collaborator, score)` pairs, best first.
    ranked: Vec<(String, f64)>,
}

impl PyMatchResult {
    fn new(m: MatchResult, roster: &[String]) -> Self {
        let ranked = m.ranked(roster).into_iter().map(|s| (s.collaborator, s.score)).collect();
        PyMatchResult {
            pr_id: m.pr_id,
            top_topics: m.top_topics,
            candidates: m.candidates,
            ranked,
        }
    }
}

#[pymethods]
impl PyMatchResult {
    fn __repr__(&self) -> String {
        format!(
            "MatchResult(pr_id={:?}, top_topics={:?}, candidates={:?})",
            self.pr_id, self.top_topics, self.candidates
        )
    }
}

/// A trained model: topics, relation matrix and the training corpus.
#[pyclass(name = "Model", module = "tima", frozen)]
struct PyModel {
    inner: ModelBundle,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (corpus, k=15, alpha=None, beta=0.1, iterations=1000, seed=0))]
    fn train(
        py: Python<'_>,
        corpus: &PyCorpus,
        k: usize,
        alpha: Option<f64>,
        beta: f64,
        iterations: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = lda_config(k, alpha, beta, iterations, seed)?;
        let c = corpus.inner.clone();
        let (inner, _) = py.detach(|| ModelBundle::train(c, &cfg)).map_err(err)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: ModelBundle::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.lda.k()
    }

    #[getter]
    fn roster(&self) -> Vec<String> {
        self.inner.relation.roster.clone()
    }

    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        self.inner.lda.theta.to_rows()
    }

    #[getter]
    fn phi(&self) -> Vec<Vec<f64>> {
        self.inner.lda.phi.to_rows()
    }

    /// Collaborator x topic matrix, rows summing to one.
    #[getter]
    fn relation(&self) -> Vec<Vec<f64>> {
        self.inner.relation.matrix.to_rows()
    }

    #[getter]
    fn raw_relevance(&self) -> Vec<Vec<f64>> {
        self.inner.relation.raw_relevance.to_rows()
    }

    #[getter]
    fn expertise(&self) -> Vec<f64> {
        self.inner.relation.expertise.clone()
    }

    /// Topic distribution of an unseen PR. Raises NoSignalError if no word is in the vocabulary.
    fn topic_distribution(&self, pr: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
        Ok(self.inner.topic_distribution(&extract_pr(pr)?).map_err(err)?.probs)
    }

    #[pyo3(signature = (pr, tie_tolerance=DEFAULT_TIE_TOLERANCE))]
    fn match_pr(&self, pr: &Bound<'_, PyAny>, tie_tolerance: f64) -> PyResult<PyMatchResult> {
        let m = self.inner.match_pr(&extract_pr(pr)?, tie_tolerance).map_err(err)?;
        Ok(PyMatchResult::new(m, &self.inner.relation.roster))
    }

    fn export_csv(&self, normalized: bool) -> String {
        self.inner.relation.to_csv(normalized)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(k={}, documents={}, collaborators={})",
            self.inner.lda.k(),
            self.inner.lda.num_docs(),
            self.inner.relation.roster.len()
        )
    }
}

#[pymodule]
fn tima(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TimaError", m.py().get_type::<TimaError>())?;
    m.add("NoSignalError", m.py().get_type::<NoSignalError>())?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyMatchResult>()?;
    m.add_function(wrap_pyfunction!(porter_stem, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(js_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(precision_recall, m)?)?;
    m.add_function(wrap_pyfunction!(load_prs, m)?)?;
    m.add_function(wrap_pyfunction!(run_evaluation, m)?)?;
    Ok(())
}
