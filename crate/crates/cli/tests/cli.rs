use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tima(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tima"))
        .args(args)
        .env_remove("TIMA_GITHUB_TOKEN")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tima(args);
    assert!(
        out.status.success(),
        "tima {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const PARSER: [&str; 6] = ["parser", "lexer", "grammar", "syntax", "bracket", "token"];
const NETWORK: [&str; 6] = ["socket", "network", "timeout", "proxy", "packet", "latency"];

/// Topic-segregated PRs: parser work reviewed by `ana`, network work by `ben`.
fn planted_jsonl(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..n {
        let (words, reviewer) = if rng.gen_bool(0.5) { (&PARSER, "ana") } else { (&NETWORK, "ben") };
        let title: Vec<&str> = (0..20).map(|_| *words.choose(&mut rng).unwrap()).collect();
        out.push_str(&format!(
            "{{\"id\":\"{i}\",\"title\":\"{}\",\"reviewers\":[\"{reviewer}\"],\"closed_at\":\"2016-01-{:02}T00:00:00Z\"}}\n",
            title.join(" "),
            1 + i % 28
        ));
    }
    out
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Fixture { _dir: dir, root }
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.root.join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Ingest and train on planted data, returning the model dir.
    fn model(&self, n: usize) -> PathBuf {
        let input = self.write("prs.jsonl", &planted_jsonl(n, 3));
        let corpus = self.path("corpus");
        let model = self.path("model");
        ok(&["ingest", "--input", p(&input), "--out", p(&corpus)]);
        ok(&["train", "--corpus", p(&corpus), "--out", p(&model), "--k", "2", "--iters", "200"]);
        model
    }
}

#[test]
fn ingest_three_prs() {
    let f = Fixture::new();
    let input = f.write(
        "prs.jsonl",
        concat!(
            r#"{"id":"1","title":"Fix parser crash","reviewers":["ana"],"closed_at":"2016-01-01T00:00:00Z"}"#,
            "\n",
            r#"{"id":"2","title":"Network timeout retry","reviewers":["ben"],"closed_at":"2016-01-02T00:00:00Z"}"#,
            "\n",
            r#"{"id":"3","title":"Parser error recovery","reviewers":["ana","ben"],"closed_at":"2016-01-03T00:00:00Z"}"#,
            "\n"
        ),
    );
    let out = f.path("corpus");
    let stdout = ok(&["ingest", "--input", p(&input), "--out", p(&out)]);
    assert!(stdout.contains("documents:            3"), "{stdout}");
    assert!(stdout.contains("collaborators:        2"), "{stdout}");
    assert_eq!(fs::read_to_string(out.join("docs.txt")).unwrap().lines().count(), 3);
}

#[test]
fn missing_input_is_a_data_error() {
    let f = Fixture::new();
    let out = tima(&["ingest", "--input", p(&f.path("nope.jsonl")), "--out", p(&f.path("c"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.jsonl"));
}

#[test]
fn github_without_token_is_a_config_error() {
    let f = Fixture::new();
    let out = tima(&["ingest", "--github", "o/r", "--out", p(&f.path("c"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("TIMA_GITHUB_TOKEN"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(tima(&["train"]).status.code(), Some(1));
    assert_eq!(tima(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tima(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_rejects_single_topic() {
    let f = Fixture::new();
    let out = tima(&["train", "--corpus", p(&f.path("missing")), "--out", p(&f.path("m")), "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!f.path("m").exists());
}

#[test]
fn train_writes_one_theta_row_per_document_deterministically() {
    let f = Fixture::new();
    let model = f.model(30);
    let theta = fs::read(model.join("theta.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&theta).lines().count(), 30);

    let again = f.path("model2");
    ok(&["train", "--corpus", p(&f.path("corpus")), "--out", p(&again), "--k", "2", "--iters", "200"]);
    assert_eq!(fs::read(again.join("theta.csv")).unwrap(), theta);
    assert_eq!(fs::read(again.join("phi.csv")).unwrap(), fs::read(model.join("phi.csv")).unwrap());
    assert!(fs::read_to_string(model.join("lda.json")).unwrap().contains("\"seed\": 0"));
}

#[test]
fn match_prints_planted_collaborator_and_no_signal() {
    let f = Fixture::new();
    let model = f.model(40);
    let batch = f.write(
        "new.jsonl",
        concat!(
            r#"{"id":"p","title":"parser grammar lexer token syntax"}"#,
            "\n",
            r#"{"id":"n","title":"socket proxy timeout latency"}"#,
            "\n",
            r#"{"id":"z","title":"completely unrelated words"}"#,
            "\n"
        ),
    );
    let stdout = ok(&["match", "--model", p(&model), "--batch", p(&batch)]);
    let block = |id: &str| -> String {
        stdout
            .split("pr ")
            .find(|b| b.starts_with(&format!("{id}:")))
            .unwrap()
            .to_string()
    };
    assert!(block("p").contains("candidates: ana\n"), "{stdout}");
    assert!(block("n").contains("candidates: ben\n"), "{stdout}");
    assert!(block("z").contains("no-signal"), "{stdout}");
    assert!(block("p").contains("scores:"));

    let single = f.write("one.json", r#"{"id":"p","title":"parser"}"#);
    assert!(ok(&["match", "--model", p(&model), "--pr", p(&single)]).contains("candidates: ana\n"));
}

#[test]
fn single_collaborator_always_matched() {
    let f = Fixture::new();
    let input = f.write(
        "prs.jsonl",
        &planted_jsonl(10, 5).replace("\"ben\"", "\"ana\""),
    );
    ok(&["ingest", "--input", p(&input), "--out", p(&f.path("c"))]);
    ok(&["train", "--corpus", p(&f.path("c")), "--out", p(&f.path("m")), "--k", "2", "--iters", "50"]);
    let pr = f.write("x.json", r#"{"id":"x","title":"socket"}"#);
    assert!(ok(&["match", "--model", p(&f.path("m")), "--pr", p(&pr)]).contains("candidates: ana\n"));
}

#[test]
fn eval_sweep_csv_has_one_row_per_k() {
    let f = Fixture::new();
    let input = f.write("prs.jsonl", &planted_jsonl(40, 9));
    let out = f.path("eval");
    let args = [
        "eval", "--input", p(&input), "--sweep", "2,3,4,5,6,7", "--iters", "50", "--out", p(&out),
    ];
    let stdout = ok(&args);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(csv.lines().next(), Some("k,mean_precision,mean_recall"));
    assert!(stdout.ends_with(&csv));
    assert!(out.join("report_k4.json").exists());

    ok(&args);
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap(), csv);
}

#[test]
fn eval_rejects_zero_test_fraction() {
    let f = Fixture::new();
    let input = f.write("prs.jsonl", &planted_jsonl(10, 1));
    let out = tima(&["eval", "--input", p(&input), "--test-fraction", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn export_matrix_rows_and_header() {
    let f = Fixture::new();
    let model = f.model(30);
    let out = f.path("rel.csv");
    ok(&["export-matrix", "--model", p(&model), "--out", p(&out), "--normalized"]);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("collaborator,0,1"));
    let names: Vec<&str> = lines
        .map(|l| {
            let mut cells = l.split(',');
            let name = cells.next().unwrap();
            let sum: f64 = cells.map(|c| c.parse::<f64>().unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-9);
            name
        })
        .collect();
    assert_eq!(names, vec!["ana", "ben"]);

    let raw = f.path("raw.csv");
    ok(&["export-matrix", "--model", p(&model), "--out", p(&raw), "--raw"]);
    assert!(fs::read_to_string(&raw).unwrap().starts_with("collaborator,0,1\n"));
    assert_eq!(tima(&["export-matrix", "--model", p(&model), "--out", p(&raw)]).status.code(), Some(1));
}

#[test]
fn inputs_are_not_modified() {
    let f = Fixture::new();
    let model = f.model(20);
    let input = f.path("prs.jsonl");
    let before_input = fs::read(&input).unwrap();
    let before_docs = fs::read(f.path("corpus/docs.txt")).unwrap();
    let pr = f.write("x.json", r#"{"id":"x","title":"parser"}"#);
    ok(&["match", "--model", p(&model), "--pr", p(&pr)]);
    ok(&["eval", "--input", p(&input), "--k", "2", "--iters", "20"]);
    assert_eq!(fs::read(&input).unwrap(), before_input);
    assert_eq!(fs::read(f.path("corpus/docs.txt")).unwrap(), before_docs);
}
