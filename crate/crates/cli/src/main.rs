use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use tima_core::eval::{self, EvalOptions};
use tima_core::github;
use tima_core::lda::{DEFAULT_BETA, DEFAULT_ITERATIONS, DEFAULT_TOPICS};
use tima_core::matcher::DEFAULT_TIE_TOLERANCE;
use tima_core::{corpus, Corpus, Error, LdaConfig, ModelBundle, PrepConfig};

/// Match incoming pull requests to the collaborators most likely to integrate them.
#[derive(Debug, Parser)]
#[command(name = "tima", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a corpus directory from a JSONL file or a GitHub repository.
    Ingest(IngestArgs),
    /// Fit topics and the relation matrix on a corpus.
    Train(TrainArgs),
    /// Recommend integrators for new pull requests.
    Match(MatchArgs),
    /// Chronological hold-out evaluation, optionally over several topic counts.
    Eval(EvalArgs),
    /// Write the collaborator x topic matrix as CSV.
    ExportMatrix(ExportArgs),
}

#[derive(Debug, Args)]
struct PrepArgs {
    /// Stopword list, one word per line (`#` comments allowed).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    min_token_len: usize,
    /// Keep purely numeric tokens.
    #[arg(long)]
    keep_numeric: bool,
}

impl PrepArgs {
    fn config(&self) -> Result<PrepConfig, CliError> {
        let mut cfg = match &self.stopwords {
            Some(path) => PrepConfig::with_stopwords_file(path)?,
            None => PrepConfig::default(),
        };
        cfg.min_token_len = self.min_token_len;
        cfg.drop_numeric = !self.keep_numeric;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "github"])))]
struct IngestArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// owner/name; the token is read from TIMA_GITHUB_TOKEN.
    #[arg(long)]
    github: Option<String>,
    /// Also write the fetched pull requests as JSONL.
    #[arg(long)]
    save_jsonl: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    prep: PrepArgs,
}

#[derive(Debug, Args)]
struct LdaArgs {
    #[arg(long, default_value_t = DEFAULT_TOPICS)]
    k: usize,
    /// Defaults to 50 / k.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LdaArgs {
    fn config(&self, k: usize) -> Result<LdaConfig, CliError> {
        let cfg = LdaConfig {
            alpha: self.alpha.unwrap_or(50.0 / k as f64),
            beta: self.beta,
            iterations: self.iters,
            seed: self.seed,
            ..LdaConfig::with_topics(k)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    lda: LdaArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("prs").required(true).args(["pr", "batch"])))]
struct MatchArgs {
    #[arg(long)]
    model: PathBuf,
    /// A single pull request JSON object.
    #[arg(long)]
    pr: Option<PathBuf>,
    /// One pull request JSON object per line.
    #[arg(long)]
    batch: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TIE_TOLERANCE)]
    tie_tolerance: f64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    lda: LdaArgs,
    /// Comma-separated topic counts; overrides --k.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
    #[arg(long, default_value_t = eval::DEFAULT_TEST_FRACTION)]
    test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_TIE_TOLERANCE)]
    tie_tolerance: f64,
    /// Also compare fold-in against retrained topic distributions.
    #[arg(long)]
    divergence: bool,
    /// Directory for sweep.csv and per-K JSON reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    prep: PrepArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("variant").required(true).args(["raw", "normalized"])))]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    normalized: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::InvalidConfig(_)) => 1,
            CliError::Core(Error::Invariant(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, contents).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let prep = args.prep.config()?;
    let prs = match (&args.input, &args.github) {
        (Some(path), _) => corpus::ingest_jsonl(path)?,
        (None, Some(repo)) => {
            let token = github::token_from_env()?;
            github::fetch_github(repo, &token)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    if let Some(path) = &args.save_jsonl {
        corpus::write_jsonl(&prs, path)?;
    }
    let (corpus, summary) = corpus::build_corpus(&prs, &prep)?;
    corpus.save(&args.out)?;
    println!("pull requests:        {}", summary.input_prs);
    println!("without reviewers:    {}", summary.unreviewed.len());
    println!("dropped (empty text): {}", summary.dropped_empty.len());
    println!("documents:            {}", summary.documents);
    println!("collaborators:        {}", summary.collaborators);
    println!("vocabulary:           {}", summary.vocabulary);
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let cfg = args.lda.config(args.lda.k)?;
    let corpus = Corpus::load(&args.corpus)?;
    let (bundle, trace) = ModelBundle::train(corpus, &cfg)?;
    bundle.save(&args.out)?;
    println!(
        "trained K={} on {} documents, {} words, {} collaborators (seed {})",
        cfg.k,
        bundle.corpus.len(),
        bundle.corpus.vocabulary.len(),
        bundle.relation.roster.len(),
        cfg.seed
    );
    for (sweep, ll) in &trace.points {
        println!("  sweep {sweep:>5}  log-likelihood {ll:.3}");
    }
    Ok(())
}

fn match_cmd(args: MatchArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&args.tie_tolerance) {
        return Err(CliError::Usage(format!(
            "--tie-tolerance must be in [0, 1), got {}",
            args.tie_tolerance
        )));
    }
    let bundle = ModelBundle::load(&args.model)?;
    let prs = match (&args.pr, &args.batch) {
        (Some(path), _) => vec![corpus::read_pr_json(path)?],
        (None, Some(path)) => corpus::read_incoming_jsonl(path)?,
        (None, None) => unreachable!("clap requires an input"),
    };
    for pr in &prs {
        match bundle.match_pr(pr, args.tie_tolerance) {
            Ok(m) => {
                println!("pr {}: ok", pr.id);
                let topics: Vec<String> = m.top_topics.iter().map(ToString::to_string).collect();
                println!("  top_topics: {}", topics.join(" "));
                println!("  candidates: {}", m.candidates.join(" "));
                println!("  scores:");
                for s in m.ranked(&bundle.relation.roster) {
                    println!("    {} {}", s.collaborator, s.score);
                }
            }
            Err(Error::NoSignal { oov_count, .. }) => {
                println!("pr {}: no-signal ({oov_count} out-of-vocabulary tokens)", pr.id);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<(), CliError> {
    let ks = if args.sweep.is_empty() { vec![args.lda.k] } else { args.sweep.clone() };
    let configs = ks
        .iter()
        .map(|&k| args.lda.config(k))
        .collect::<Result<Vec<_>, _>>()?;
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(CliError::Usage(format!(
            "--test-fraction must be in (0, 1), got {}",
            args.test_fraction
        )));
    }
    if !(0.0..1.0).contains(&args.tie_tolerance) {
        return Err(CliError::Usage(format!(
            "--tie-tolerance must be in [0, 1), got {}",
            args.tie_tolerance
        )));
    }
    let prep = args.prep.config()?;
    let prs = corpus::ingest_jsonl(&args.input)?;

    let mut reports = Vec::with_capacity(configs.len());
    for cfg in configs {
        let opts = EvalOptions {
            lda: cfg,
            test_fraction: args.test_fraction,
            tie_tolerance: args.tie_tolerance,
            prep: prep.clone(),
        };
        let report = eval::run_evaluation(&prs, &opts)?;
        print!("{}", report.to_table());
        if let Some(dir) = &args.out {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_out(&dir.join(format!("report_k{}.json", report.k)), &format!("{json}\n"))?;
        }
        if args.divergence {
            let div = eval::divergence_study(&prs, &opts)?;
            println!(
                "K={} mean JS divergence (fold-in vs retrain) = {:.4} over {} documents ({} skipped)",
                div.k,
                div.mean,
                div.per_doc.len(),
                div.skipped.len()
            );
            if let Some(dir) = &args.out {
                write_out(&dir.join(format!("divergence_k{}.csv", div.k)), &div.to_csv())?;
            }
        }
        reports.push(report);
    }
    let csv = eval::sweep_csv(&reports);
    print!("{csv}");
    if let Some(dir) = &args.out {
        write_out(&dir.join("sweep.csv"), &csv)?;
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<(), CliError> {
    let bundle = ModelBundle::load(&args.model)?;
    write_out(&args.out, &bundle.relation.to_csv(args.normalized && !args.raw))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train(a),
        Command::Match(a) => match_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::ExportMatrix(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
