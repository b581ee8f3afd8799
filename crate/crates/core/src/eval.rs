//! Evaluation: chronological splits, per-PR precision and recall, and the
//! Jensen-Shannon divergence between folded-in and retrained topic distributions.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{build_corpus, BuildSummary, PullRequest};
use crate::error::{Error, Result};
use crate::inference::{self, fold_in, TopicDistribution};
use crate::lda::{self, LdaConfig};
use crate::matcher::{match_pr, DEFAULT_TIE_TOLERANCE};
use crate::relation;
use crate::textprep::PrepConfig;

pub const DEFAULT_TEST_FRACTION: f64 = 0.1;

/// Precision and recall of a match set against the PR's core reviewers.
pub fn precision_recall<T: Ord>(core_reviewers: &BTreeSet<T>, match_set: &BTreeSet<T>) -> Result<(f64, f64)> {
    if match_set.is_empty() {
        return Err(Error::EmptyMatchSet);
    }
    if core_reviewers.is_empty() {
        return Err(Error::Degenerate("recall is undefined without core reviewers".into()));
    }
    let hits = core_reviewers.intersection(match_set).count() as f64;
    Ok((hits / match_set.len() as f64, hits / core_reviewers.len() as f64))
}

/// Sort by `closed_at` (ties by id) and hold out the latest `ceil(n * test_fraction)` PRs.
pub fn chronological_split(
    prs: &[PullRequest],
    test_fraction: f64,
) -> Result<(Vec<PullRequest>, Vec<PullRequest>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    if prs.len() < 2 {
        return Err(Error::Split(format!("need at least 2 pull requests, got {}", prs.len())));
    }
    let mut keyed = Vec::with_capacity(prs.len());
    for pr in prs {
        let closed = pr
            .closed_at
            .ok_or_else(|| Error::Split(format!("pull request {} has no closed_at", pr.id)))?;
        keyed.push((closed, pr));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));

    let n = prs.len();
    // guard against 10 * 0.1 landing a hair above 1
    let n_test = ((n as f64 * test_fraction) - 1e-9).ceil().max(0.0) as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::Split(format!(
            "test fraction {test_fraction} on {n} pull requests leaves {} train and {n_test} test",
            n.saturating_sub(n_test)
        )));
    }
    let sorted: Vec<PullRequest> = keyed.into_iter().map(|(_, pr)| pr.clone()).collect();
    let test = sorted[n - n_test..].to_vec();
    let mut train = sorted;
    train.truncate(n - n_test);
    Ok((train, test))
}

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    for (name, d) in [("p", p), ("q", q)] {
        if d.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidDistribution(format!("{name} has a negative or non-finite entry")));
        }
        let sum: f64 = d.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!("{name} sums to {sum}")));
        }
    }
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            kl_p += a * (a / m).log2();
        }
        if b > 0.0 {
            kl_q += b * (b / m).log2();
        }
    }
    Ok((0.5 * (kl_p + kl_q)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub lda: LdaConfig,
    pub test_fraction: f64,
    pub tie_tolerance: f64,
    pub prep: PrepConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            lda: LdaConfig::default(),
            test_fraction: DEFAULT_TEST_FRACTION,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            prep: PrepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrEval {
    pub pr_id: String,
    pub precision: f64,
    pub recall: f64,
    pub core_reviewers: Vec<String>,
    pub candidates: Vec<String>,
    /// None of the core reviewers is in the training roster.
    pub unreachable_core: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub rule: String,
    pub test_fraction: f64,
    pub train_prs: usize,
    pub test_prs: usize,
    pub train_last_closed: Option<DateTime<Utc>>,
    pub test_first_closed: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub lda: LdaConfig,
    pub averaging: String,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub per_pr: Vec<PrEval>,
    pub split_spec: SplitSpec,
    pub corpus: BuildSummary,
    /// Test PRs with no in-vocabulary tokens.
    pub no_signal: Vec<String>,
    /// Test PRs without reviewers, which cannot be scored.
    pub no_reviewers: Vec<String>,
    pub unreachable_core: usize,
}

fn split_spec(train: &[PullRequest], test: &[PullRequest], test_fraction: f64) -> Result<SplitSpec> {
    let train_last = train.iter().filter_map(|p| p.closed_at).max();
    let test_first = test.iter().filter_map(|p| p.closed_at).min();
    if let (Some(a), Some(b)) = (train_last, test_first) {
        if a > b {
            return Err(Error::Invariant(format!(
                "temporal leakage: training PR closed at {a} after test PR closed at {b}"
            )));
        }
    }
    Ok(SplitSpec {
        rule: "chronological by closed_at, ties by id".into(),
        test_fraction,
        train_prs: train.len(),
        test_prs: test.len(),
        train_last_closed: train_last,
        test_first_closed: test_first,
    })
}

pub fn run_evaluation(prs: &[PullRequest], opts: &EvalOptions) -> Result<EvalReport> {
    let (train, test) = chronological_split(prs, opts.test_fraction)?;
    let split = split_spec(&train, &test, opts.test_fraction)?;
    let (corpus, summary) = build_corpus(&train, &opts.prep)?;
    let model = lda::train(&corpus, &opts.lda)?;
    let rm = relation::build(&model, &corpus)?;

    let roster: BTreeSet<&str> = corpus.collaborators.iter().map(String::as_str).collect();
    let mut per_pr = Vec::new();
    let mut no_signal = Vec::new();
    let mut no_reviewers = Vec::new();
    for pr in &test {
        if pr.reviewers.is_empty() {
            no_reviewers.push(pr.id.clone());
            continue;
        }
        let dist = match fold_in(pr, &model, &corpus.vocabulary, &corpus.prep) {
            Ok(d) => d,
            Err(Error::NoSignal { .. }) => {
                no_signal.push(pr.id.clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        let m = match_pr(&dist, &rm, opts.tie_tolerance)?;
        let matched: BTreeSet<String> = m.candidates.iter().cloned().collect();
        let (precision, recall) = precision_recall(&pr.reviewers, &matched)?;
        per_pr.push(PrEval {
            pr_id: pr.id.clone(),
            precision,
            recall,
            core_reviewers: pr.reviewers.iter().cloned().collect(),
            candidates: m.candidates,
            unreachable_core: pr.reviewers.iter().all(|r| !roster.contains(r.as_str())),
        });
    }
    if per_pr.is_empty() {
        return Err(Error::Degenerate(format!(
            "no scorable test pull requests ({} without reviewers, {} without signal)",
            no_reviewers.len(),
            no_signal.len()
        )));
    }
    let n = per_pr.len() as f64;
    Ok(EvalReport {
        k: opts.lda.k,
        lda: opts.lda.clone(),
        averaging: "macro: arithmetic mean over scored test PRs".into(),
        mean_precision: per_pr.iter().map(|p| p.precision).sum::<f64>() / n,
        mean_recall: per_pr.iter().map(|p| p.recall).sum::<f64>() / n,
        unreachable_core: per_pr.iter().filter(|p| p.unreachable_core).count(),
        per_pr,
        split_spec: split,
        corpus: summary,
        no_signal,
        no_reviewers,
    })
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<12} {:>9} {:>9}  candidates / core reviewers", "pr", "precision", "recall").unwrap();
        for p in &self.per_pr {
            writeln!(
                out,
                "{:<12} {:>9.3} {:>9.3}  {} / {}",
                p.pr_id,
                p.precision,
                p.recall,
                p.candidates.join(" "),
                p.core_reviewers.join(" ")
            )
            .unwrap();
        }
        writeln!(
            out,
            "K={} scored={} mean_precision={:.4} mean_recall={:.4} ({})",
            self.k,
            self.per_pr.len(),
            self.mean_precision,
            self.mean_recall,
            self.averaging
        )
        .unwrap();
        writeln!(
            out,
            "no_signal={} no_reviewers={} unreachable_core={}",
            self.no_signal.len(),
            self.no_reviewers.len(),
            self.unreachable_core
        )
        .unwrap();
        out
    }
}

/// One row per K: `k,mean_precision,mean_recall`.
pub fn sweep_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("k,mean_precision,mean_recall\n");
    for r in reports {
        writeln!(out, "{},{},{}", r.k, r.mean_precision, r.mean_recall).unwrap();
    }
    out
}

/// Evaluate once per topic count. `make_config` maps K to the LDA config to use.
pub fn run_sweep(
    prs: &[PullRequest],
    ks: &[usize],
    opts: &EvalOptions,
    make_config: impl Fn(usize) -> LdaConfig,
) -> Result<Vec<EvalReport>> {
    ks.iter()
        .map(|&k| {
            let o = EvalOptions {
                lda: make_config(k),
                ..opts.clone()
            };
            run_evaluation(prs, &o)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub k: usize,
    pub mean: f64,
    pub per_doc: Vec<(String, f64)>,
    /// Test PRs with no tokens left after preprocessing.
    pub skipped: Vec<String>,
}

impl DivergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pr_id,js_divergence\n");
        for (id, v) in &self.per_doc {
            writeln!(out, "{id},{v}").unwrap();
        }
        out
    }
}

/// Compare, for each held-out PR, the theta row from retraining with the PR
/// included against the fold-in distribution computed from that same model's
/// topic-word distributions.
pub fn divergence_study(prs: &[PullRequest], opts: &EvalOptions) -> Result<DivergenceReport> {
    let (train, test) = chronological_split(prs, opts.test_fraction)?;
    split_spec(&train, &test, opts.test_fraction)?;
    let (corpus, _) = build_corpus(&train, &opts.prep)?;

    let (usable, skipped): (Vec<&PullRequest>, Vec<&PullRequest>) = test
        .iter()
        .partition(|pr| !corpus.prep.process(&pr.text()).is_empty());
    if usable.is_empty() {
        return Err(Error::Degenerate("no test documents for the divergence study".into()));
    }
    let usable: Vec<PullRequest> = usable.into_iter().cloned().collect();
    let (model, vocab, retrained) = inference::retrain_with_vocab(&usable, &corpus, &opts.lda)?;

    let mut per_doc = Vec::with_capacity(usable.len());
    for (pr, theta) in usable.iter().zip(&retrained) {
        let folded: TopicDistribution = fold_in(pr, &model, &vocab, &corpus.prep)?;
        per_doc.push((pr.id.clone(), js_divergence(&theta.probs, &folded.probs)?));
    }
    let mean = per_doc.iter().map(|(_, v)| v).sum::<f64>() / per_doc.len() as f64;
    Ok(DivergenceReport {
        k: opts.lda.k,
        mean,
        per_doc,
        skipped: skipped.into_iter().map(|p| p.id.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::pr;

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precision_recall_cases() {
        let (p, r) = precision_recall(&set(&["a", "b", "c"]), &set(&["a"])).unwrap();
        assert_eq!(p, 1.0);
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(precision_recall(&set(&["a", "b"]), &set(&["a", "b"])).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall(&set(&["a"]), &set(&["b"])).unwrap(), (0.0, 0.0));
        assert!(matches!(precision_recall(&set(&["a"]), &set(&[])), Err(Error::EmptyMatchSet)));
    }

    fn dated(id: &str, day: u32) -> PullRequest {
        let mut p = pr(id, "parser", &["a"]);
        p.closed_at = Some(format!("2016-01-{day:02}T00:00:00Z").parse().unwrap());
        p
    }

    #[test]
    fn split_holds_out_latest() {
        let prs: Vec<_> = (1..=10).rev().map(|d| dated(&format!("p{d}"), d)).collect();
        let (train, test) = chronological_split(&prs, 0.1).unwrap();
        assert_eq!(train.len(), 9);
        assert_eq!(test.len(), 1);
        assert_eq!(test[0].id, "p10");
        assert!(train.iter().all(|p| p.closed_at <= test[0].closed_at));
    }

    #[test]
    fn split_rejects_empty_sides() {
        let prs: Vec<_> = (1..=10).map(|d| dated(&format!("p{d}"), d)).collect();
        assert!(matches!(chronological_split(&prs, 0.99), Err(Error::Split(_))));
        assert!(matches!(chronological_split(&prs, 0.0), Err(Error::Split(_))));
        assert!(matches!(chronological_split(&prs[..1], 0.5), Err(Error::Split(_))));
    }

    #[test]
    fn split_ties_broken_by_id() {
        let prs = vec![dated("b", 1), dated("c", 1), dated("a", 1)];
        let (train, test) = chronological_split(&prs, 0.3).unwrap();
        assert_eq!(train.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(test[0].id, "c");
    }

    #[test]
    fn js_cases() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(js_divergence(&p, &p).unwrap(), 0.0);
        assert_eq!(js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let q = [0.6, 0.1, 0.3];
        assert_eq!(js_divergence(&p, &q).unwrap(), js_divergence(&q, &p).unwrap());
        assert!(js_divergence(&p, &[0.5, 0.5]).is_err());
        assert!(js_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(js_divergence(&[1.5, -0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn sweep_csv_shape() {
        assert_eq!(sweep_csv(&[]), "k,mean_precision,mean_recall\n");
    }
}
