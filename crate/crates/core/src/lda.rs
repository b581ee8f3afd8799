//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! Randomness comes from a ChaCha8 stream seeded with [`LdaConfig::seed`], so a
//! (corpus, config) pair produces bit-identical models on every platform.
//!
//! A model directory holds `lda.json` (config and vocabulary hash), `theta.csv`
//! (documents x topics) and `phi.csv` (topics x words).

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How theta and phi are read out of the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Readout {
    /// Estimate from the counts of the last sweep.
    #[default]
    FinalState,
    /// Average the estimates of every `thin`-th sweep after `burn_in` sweeps.
    Averaged { burn_in: usize, thin: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub readout: Readout,
    /// Record the log-likelihood every this many sweeps (plus first and last).
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
}

fn default_trace_every() -> usize {
    100
}

pub const DEFAULT_TOPICS: usize = 15;
pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_ITERATIONS: usize = 1000;

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(DEFAULT_TOPICS)
    }
}

impl LdaConfig {
    /// Defaults for `k` topics: alpha = 50/k, beta = 0.1, 1000 sweeps.
    pub fn with_topics(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k as f64,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            readout: Readout::FinalState,
            trace_every: default_trace_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k must be at least 2, got {}", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidConfig("trace_every must be at least 1".into()));
        }
        if let Readout::Averaged { burn_in, thin } = self.readout {
            if thin == 0 || burn_in >= self.iterations {
                return Err(Error::InvalidConfig(format!(
                    "averaged readout needs thin >= 1 and burn_in < iterations (burn_in {burn_in}, thin {thin})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Documents x topics, row d is P(topic | d).
    pub theta: Matrix,
    /// Topics x words, row k is P(word | topic k).
    pub phi: Matrix,
    pub config: LdaConfig,
    pub vocab_hash: String,
}

/// Log-likelihood samples recorded during training, as (sweep, value).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub points: Vec<(usize, f64)>,
}

impl TrainTrace {
    pub fn first(&self) -> Option<(usize, f64)> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<(usize, f64)> {
        self.points.last().copied()
    }
}

const ROW_SUM_TOLERANCE: f64 = 1e-9;

fn check_stochastic(m: &Matrix, name: &str) -> Result<()> {
    for (i, row) in m.iter_rows().enumerate() {
        if let Some(v) = row.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Invariant(format!("{name} row {i} has non-positive entry {v}")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::Invariant(format!("{name} row {i} sums to {sum}")));
        }
    }
    Ok(())
}

impl LdaModel {
    /// Assemble a model from estimated matrices, checking shapes and normalization.
    pub fn from_parts(theta: Matrix, phi: Matrix, config: LdaConfig, vocab_hash: String) -> Result<Self> {
        if theta.cols() != config.k {
            return Err(Error::DimensionMismatch {
                expected: config.k,
                found: theta.cols(),
            });
        }
        if phi.rows() != config.k {
            return Err(Error::DimensionMismatch {
                expected: config.k,
                found: phi.rows(),
            });
        }
        check_stochastic(&theta, "theta")?;
        check_stochastic(&phi, "phi")?;
        Ok(LdaModel {
            theta,
            phi,
            config,
            vocab_hash,
        })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.cols()
    }

    pub fn num_docs(&self) -> usize {
        self.theta.rows()
    }

    pub fn check_vocab(&self, vocab_hash: &str) -> Result<()> {
        if self.vocab_hash != vocab_hash {
            return Err(Error::VocabMismatch {
                expected: self.vocab_hash.clone(),
                found: vocab_hash.to_string(),
            });
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = ModelMeta {
            config: self.config.clone(),
            seed: self.config.seed,
            vocab_hash: self.vocab_hash.clone(),
            num_docs: self.num_docs(),
            vocab_size: self.vocab_size(),
        };
        let json = serde_json::to_string_pretty(&meta).expect("model meta serializes");
        let path = dir.join("lda.json");
        fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
        self.theta.write_csv(&dir.join("theta.csv"))?;
        self.phi.write_csv(&dir.join("phi.csv"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("lda.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: ModelMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })?;
        let theta = Matrix::read_csv(&dir.join("theta.csv"))?;
        let phi = Matrix::read_csv(&dir.join("phi.csv"))?;
        if theta.rows() != meta.num_docs || phi.cols() != meta.vocab_size {
            return Err(Error::Invariant(format!(
                "model files disagree with lda.json ({} docs, {} words)",
                meta.num_docs, meta.vocab_size
            )));
        }
        LdaModel::from_parts(theta, phi, meta.config, meta.vocab_hash)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    config: LdaConfig,
    seed: u64,
    vocab_hash: String,
    num_docs: usize,
    vocab_size: usize,
}

pub fn train(corpus: &Corpus, cfg: &LdaConfig) -> Result<LdaModel> {
    train_with_trace(corpus, cfg).map(|(model, _)| model)
}

pub fn train_with_trace(corpus: &Corpus, cfg: &LdaConfig) -> Result<(LdaModel, TrainTrace)> {
    train_tokens(&corpus.token_rows(), corpus.vocabulary.len(), corpus.vocab_hash(), cfg)
}

/// Train on raw token-id rows. Every row must be non-empty with ids below `vocab_size`.
pub fn train_tokens(
    docs: &[&[u32]],
    vocab_size: usize,
    vocab_hash: String,
    cfg: &LdaConfig,
) -> Result<(LdaModel, TrainTrace)> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::UnusableCorpus("cannot train on an empty corpus".into()));
    }
    if let Some(d) = docs.iter().position(|d| d.is_empty()) {
        return Err(Error::UnusableCorpus(format!("document {d} is empty")));
    }
    if docs.iter().flat_map(|d| d.iter()).any(|&w| w as usize >= vocab_size) {
        return Err(Error::UnusableCorpus("token id outside vocabulary".into()));
    }
    let total: usize = docs.iter().map(|d| d.len()).sum();
    if cfg.k > total {
        return Err(Error::Degenerate(format!(
            "{} topics requested for only {total} tokens",
            cfg.k
        )));
    }

    let mut sampler = GibbsSampler::new(docs, vocab_size, cfg);
    let mut trace = TrainTrace::default();
    let mut accum: Option<(Matrix, Matrix, usize)> = None;

    for sweep in 1..=cfg.iterations {
        sampler.sweep();
        #[cfg(debug_assertions)]
        sampler.check_counts();

        if sweep == 1 || sweep % cfg.trace_every == 0 || sweep == cfg.iterations {
            trace.points.push((sweep, sampler.log_likelihood()));
        }
        if let Readout::Averaged { burn_in, thin } = cfg.readout {
            if sweep > burn_in && (sweep - burn_in) % thin == 0 {
                let (theta, phi) = sampler.estimate();
                let entry = accum.get_or_insert_with(|| {
                    (Matrix::zeros(theta.rows(), theta.cols()), Matrix::zeros(phi.rows(), phi.cols()), 0)
                });
                add_into(&mut entry.0, &theta);
                add_into(&mut entry.1, &phi);
                entry.2 += 1;
            }
        }
    }

    let (theta, phi) = match accum {
        Some((mut theta, mut phi, n)) => {
            scale(&mut theta, 1.0 / n as f64);
            scale(&mut phi, 1.0 / n as f64);
            renormalize_rows(&mut theta);
            renormalize_rows(&mut phi);
            (theta, phi)
        }
        None => sampler.estimate(),
    };
    let model = LdaModel::from_parts(theta, phi, cfg.clone(), vocab_hash)?;
    Ok((model, trace))
}

fn add_into(acc: &mut Matrix, m: &Matrix) {
    for r in 0..m.rows() {
        for (a, b) in acc.row_mut(r).iter_mut().zip(m.row(r)) {
            *a += b;
        }
    }
}

fn scale(m: &mut Matrix, factor: f64) {
    for r in 0..m.rows() {
        m.row_mut(r).iter_mut().for_each(|v| *v *= factor);
    }
}

fn renormalize_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

/// Sum over tokens of log sum_k theta[d][k] * phi[k][w].
pub fn log_likelihood(model: &LdaModel, corpus: &Corpus) -> Result<f64> {
    model.check_vocab(&corpus.vocab_hash())?;
    if model.num_docs() != corpus.len() {
        return Err(Error::DimensionMismatch {
            expected: model.num_docs(),
            found: corpus.len(),
        });
    }
    let k = model.k();
    let mut ll = 0.0;
    for (d, doc) in corpus.documents.iter().enumerate() {
        let theta = model.theta.row(d);
        for &w in &doc.tokens {
            let p: f64 = (0..k).map(|t| theta[t] * model.phi.get(t, w as usize)).sum();
            ll += p.ln();
        }
    }
    Ok(ll)
}

struct GibbsSampler<'a> {
    docs: &'a [&'a [u32]],
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    /// Topic assignment per token, parallel to `docs`.
    z: Vec<Vec<u16>>,
    /// D x K
    ndk: Vec<u32>,
    /// K x V
    nkw: Vec<u32>,
    nk: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    fn new(docs: &'a [&'a [u32]], v: usize, cfg: &LdaConfig) -> Self {
        assert!(cfg.k <= u16::MAX as usize, "too many topics");
        let k = cfg.k;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut ndk = vec![0u32; docs.len() * k];
        let mut nkw = vec![0u32; k * v];
        let mut nk = vec![0u32; k];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.gen_range(0..k);
                        ndk[d * k + t] += 1;
                        nkw[t * v + w as usize] += 1;
                        nk[t] += 1;
                        t as u16
                    })
                    .collect()
            })
            .collect();
        GibbsSampler {
            docs,
            k,
            v,
            alpha: cfg.alpha,
            beta: cfg.beta,
            z,
            ndk,
            nkw,
            nk,
            rng,
            weights: vec![0.0; k],
        }
    }

    fn sweep(&mut self) {
        let (k, v) = (self.k, self.v);
        let v_beta = v as f64 * self.beta;
        for (d, doc) in self.docs.iter().enumerate() {
            let ndk = &mut self.ndk[d * k..(d + 1) * k];
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = self.z[d][i] as usize;
                ndk[old] -= 1;
                self.nkw[old * v + w] -= 1;
                self.nk[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (ndk[t] as f64 + self.alpha) * (self.nkw[t * v + w] as f64 + self.beta)
                        / (self.nk[t] as f64 + v_beta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new as u16;
                ndk[new] += 1;
                self.nkw[new * v + w] += 1;
                self.nk[new] += 1;
            }
        }
    }

    #[cfg(debug_assertions)]
    fn check_counts(&self) {
        let (k, v) = (self.k, self.v);
        for (d, doc) in self.docs.iter().enumerate() {
            let n: u32 = self.ndk[d * k..(d + 1) * k].iter().sum();
            assert_eq!(n as usize, doc.len(), "doc-topic counts drifted for document {d}");
        }
        for t in 0..k {
            let n: u32 = self.nkw[t * v..(t + 1) * v].iter().sum();
            assert_eq!(n, self.nk[t], "topic-word counts drifted for topic {t}");
        }
    }

    fn estimate(&self) -> (Matrix, Matrix) {
        let (k, v) = (self.k, self.v);
        let mut theta = Matrix::zeros(self.docs.len(), k);
        for (d, doc) in self.docs.iter().enumerate() {
            let denom = doc.len() as f64 + k as f64 * self.alpha;
            let row = theta.row_mut(d);
            for t in 0..k {
                row[t] = (self.ndk[d * k + t] as f64 + self.alpha) / denom;
            }
        }
        let mut phi = Matrix::zeros(k, v);
        for t in 0..k {
            let denom = self.nk[t] as f64 + v as f64 * self.beta;
            let row = phi.row_mut(t);
            for w in 0..v {
                row[w] = (self.nkw[t * v + w] as f64 + self.beta) / denom;
            }
        }
        (theta, phi)
    }

    fn log_likelihood(&self) -> f64 {
        let (theta, phi) = self.estimate();
        let mut ll = 0.0;
        for (d, doc) in self.docs.iter().enumerate() {
            let row = theta.row(d);
            for &w in doc.iter() {
                let p: f64 = (0..self.k).map(|t| row[t] * phi.get(t, w as usize)).sum();
                ll += p.ln();
            }
        }
        ll
    }
}
