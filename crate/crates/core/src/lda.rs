//! LDA baseline fitted by collapsed Gibbs sampling.
//!
//! The document-topic and topic-word multinomials are integrated out; each
//! token's topic is resampled from
//!
//! ```text
//! p(z = j | rest) ∝ (n_dj + η) · (n_jw + ρ) / (n_j + V ρ)
//! ```
//!
//! with the token's own assignment removed from the counts. Point estimates
//! are the smoothed count ratios of the last sample (or the average over all
//! post-burn-in samples).

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ProcessedDocument, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct LdaConfig {
    pub k: usize,
    /// Document-topic Dirichlet hyperparameter η. `None` means `50 / K`.
    pub doc_topic_prior: Option<f64>,
    /// Topic-word Dirichlet hyperparameter ρ.
    pub topic_word_prior: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Average the estimates over every post-burn-in sweep instead of using
    /// the final sample only.
    pub average_samples: bool,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 3,
            doc_topic_prior: None,
            topic_word_prior: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed: 0,
            average_samples: false,
        }
    }
}

impl LdaConfig {
    pub fn with_k(k: usize) -> Self {
        LdaConfig {
            k,
            ..LdaConfig::default()
        }
    }

    pub fn eta(&self) -> f64 {
        self.doc_topic_prior.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        let eta = self.eta();
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config("document-topic prior must be positive".into()));
        }
        if !(self.topic_word_prior > 0.0 && self.topic_word_prior.is_finite()) {
            return Err(Error::Config("topic-word prior must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    eta: f64,
    rho: f64,
    words: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    doc_topic: Vec<usize>,
    topic_word: Vec<usize>,
    topic_totals: Vec<usize>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Maps tokens to vocabulary columns (skipping unknown ones) and draws
    /// uniform initial topics.
    pub fn new(docs: &[ProcessedDocument], vocab: &Vocabulary, cfg: &LdaConfig) -> Self {
        let (k, v) = (cfg.k, vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let words: Vec<Vec<usize>> = docs
            .iter()
            .map(|d| d.tokens.iter().filter_map(|t| vocab.position(t)).collect())
            .collect();
        let mut doc_topic = vec![0; docs.len() * k];
        let mut topic_word = vec![0; k * v];
        let mut topic_totals = vec![0; k];
        let z = words
            .iter()
            .enumerate()
            .map(|(d, ws)| {
                ws.iter()
                    .map(|&w| {
                        let j = rng.random_range(0..k);
                        doc_topic[d * k + j] += 1;
                        topic_word[j * v + w] += 1;
                        topic_totals[j] += 1;
                        j
                    })
                    .collect()
            })
            .collect();
        GibbsSampler {
            k,
            v,
            eta: cfg.eta(),
            rho: cfg.topic_word_prior,
            words,
            z,
            doc_topic,
            topic_word,
            topic_totals,
            rng,
            weights: vec![0.0; k],
        }
    }

    /// Resamples every token's topic once, in document then position order.
    pub fn sweep(&mut self) {
        let (k, v) = (self.k, self.v);
        let v_rho = v as f64 * self.rho;
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let w = self.words[d][i];
                let old = self.z[d][i];
                self.doc_topic[d * k + old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for j in 0..k {
                    let p = (self.doc_topic[d * k + j] as f64 + self.eta)
                        * (self.topic_word[j * v + w] as f64 + self.rho)
                        / (self.topic_totals[j] as f64 + v_rho);
                    total += p;
                    self.weights[j] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.doc_topic[d * k + new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// Count tables rebuilt from the assignments alone:
    /// `(doc_topic N×K, topic_word K×V, topic_totals)`.
    pub fn recount(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let (k, v) = (self.k, self.v);
        let mut doc_topic = vec![0; self.words.len() * k];
        let mut topic_word = vec![0; k * v];
        let mut topic_totals = vec![0; k];
        for (d, (ws, zs)) in self.words.iter().zip(&self.z).enumerate() {
            for (&w, &j) in ws.iter().zip(zs) {
                doc_topic[d * k + j] += 1;
                topic_word[j * v + w] += 1;
                topic_totals[j] += 1;
            }
        }
        (doc_topic, topic_word, topic_totals)
    }

    /// The incrementally maintained count tables, same layout as [`Self::recount`].
    pub fn counts(&self) -> (&[usize], &[usize], &[usize]) {
        (&self.doc_topic, &self.topic_word, &self.topic_totals)
    }

    /// Smoothed `(γ, β)` for the current sample.
    pub fn estimate(&self) -> (Array2<f64>, Array2<f64>) {
        let (k, v, n) = (self.k, self.v, self.words.len());
        let mut gamma = Array2::from_shape_fn((k, v), |(j, w)| {
            (self.topic_word[j * v + w] as f64 + self.rho)
                / (self.topic_totals[j] as f64 + v as f64 * self.rho)
        });
        let mut beta = Array2::from_shape_fn((n, k), |(d, j)| {
            (self.doc_topic[d * k + j] as f64 + self.eta)
                / (self.words[d].len() as f64 + k as f64 * self.eta)
        });
        normalize_rows(&mut gamma);
        normalize_rows(&mut beta);
        (gamma, beta)
    }
}

fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let s = row.sum();
        row /= s;
    }
}

/// A fitted LDA model.
#[derive(Debug, Clone)]
pub struct LdaModel {
    pub k: usize,
    pub eta: f64,
    pub rho: f64,
    pub seed: u64,
    pub vocab: Vocabulary,
    pub doc_ids: Vec<String>,
    /// Topic-word distributions γ, K×V.
    pub topic_word: Array2<f64>,
    /// Document-topic distributions β, N×K.
    pub doc_topic: Array2<f64>,
    /// Final token topic assignments (in-vocabulary tokens only).
    pub assignments: Vec<Vec<usize>>,
    pub topic_word_counts: Array2<usize>,
    pub doc_topic_counts: Array2<usize>,
}

pub fn fit_lda(docs: &[ProcessedDocument], vocab: &Vocabulary, cfg: &LdaConfig) -> Result<LdaModel> {
    cfg.validate()?;
    if vocab.is_empty() {
        return Err(Error::Data("vocabulary is empty".into()));
    }
    let mut sampler = GibbsSampler::new(docs, vocab, cfg);
    if sampler.words.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus("no in-vocabulary tokens to sample".into()));
    }

    let (k, v, n) = (cfg.k, vocab.len(), docs.len());
    let mut sum_gamma = Array2::<f64>::zeros((k, v));
    let mut sum_beta = Array2::<f64>::zeros((n, k));
    let mut samples = 0usize;
    for it in 1..=cfg.iterations {
        sampler.sweep();
        if cfg.average_samples && it > cfg.burn_in {
            let (g, b) = sampler.estimate();
            sum_gamma += &g;
            sum_beta += &b;
            samples += 1;
        }
    }
    let (topic_word, doc_topic) = if cfg.average_samples {
        let mut g = sum_gamma / samples as f64;
        let mut b = sum_beta / samples as f64;
        normalize_rows(&mut g);
        normalize_rows(&mut b);
        (g, b)
    } else {
        sampler.estimate()
    };

    Ok(LdaModel {
        k,
        eta: sampler.eta,
        rho: sampler.rho,
        seed: cfg.seed,
        vocab: vocab.clone(),
        doc_ids: docs.iter().map(|d| d.id.clone()).collect(),
        topic_word,
        doc_topic,
        topic_word_counts: Array2::from_shape_vec((k, v), sampler.topic_word.clone())
            .expect("k×v counts"),
        doc_topic_counts: Array2::from_shape_vec((n, k), sampler.doc_topic.clone())
            .expect("n×k counts"),
        assignments: sampler.z,
    })
}

impl LdaModel {
    /// The `n` most probable terms of `topic`, ties broken lexicographically.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        if topic >= self.k {
            return Err(Error::Config(format!("topic {topic} out of range (K = {})", self.k)));
        }
        let v = self.vocab.len();
        if n == 0 || n > v {
            return Err(Error::Config(format!(
                "requested {n} words but the vocabulary has {v} terms"
            )));
        }
        let row = self.topic_word.row(topic);
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| self.vocab.term(a).cmp(self.vocab.term(b)))
        });
        Ok(order
            .into_iter()
            .take(n)
            .map(|i| (self.vocab.term(i).to_string(), row[i]))
            .collect())
    }

    /// Per-token negative log-likelihood of `docs` under the model:
    /// `-(Σ_d Σ_tokens ln Σ_j β_dj γ_j,token) / token count`.
    ///
    /// `docs` must be the documents the model was fitted on, in order.
    /// Out-of-vocabulary tokens are skipped.
    pub fn log_perplexity(&self, docs: &[ProcessedDocument]) -> Result<f64> {
        if docs.len() != self.doc_topic.nrows() {
            return Err(Error::Mismatch(format!(
                "model has {} documents, got {}",
                self.doc_topic.nrows(),
                docs.len()
            )));
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for (d, doc) in docs.iter().enumerate() {
            let theta = self.doc_topic.row(d);
            for tok in &doc.tokens {
                if let Some(w) = self.vocab.position(tok) {
                    let p: f64 = theta
                        .iter()
                        .zip(self.topic_word.column(w))
                        .map(|(b, g)| b * g)
                        .sum();
                    total += p.ln();
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(Error::EmptyCorpus("no in-vocabulary tokens".into()));
        }
        Ok(-total / count as f64)
    }
}

/// JSON layout of a fitted LDA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub eta: f64,
    pub rho: f64,
    pub gamma: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub seed: u64,
}

impl LdaFile {
    pub fn from_model(model: &LdaModel) -> Self {
        let rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        LdaFile {
            k: model.k,
            v: model.vocab.len(),
            eta: model.eta,
            rho: model.rho,
            gamma: rows(&model.topic_word),
            beta: rows(&model.doc_topic),
            seed: model.seed,
        }
    }

    /// Rebuilds a model for scoring. Assignments and counts are not stored
    /// and come back empty.
    pub fn into_model(self, vocab: Vocabulary, doc_ids: Vec<String>) -> Result<LdaModel> {
        let bad = |m: &str| Error::Data(format!("LDA model file: {m}"));
        if vocab.len() != self.v {
            return Err(Error::Mismatch(format!(
                "LDA model has V={} but the vocabulary has {} terms",
                self.v,
                vocab.len()
            )));
        }
        if self.beta.len() != doc_ids.len() {
            return Err(Error::Mismatch(format!(
                "LDA model has {} documents but the corpus has {}",
                self.beta.len(),
                doc_ids.len()
            )));
        }
        let to_matrix = |rows: Vec<Vec<f64>>, cols: usize| -> Result<Array2<f64>> {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != cols) {
                return Err(bad("ragged matrix"));
            }
            Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
                .map_err(|_| bad("bad matrix shape"))
        };
        if self.gamma.len() != self.k {
            return Err(bad("gamma must have K rows"));
        }
        let n = doc_ids.len();
        Ok(LdaModel {
            k: self.k,
            eta: self.eta,
            rho: self.rho,
            seed: self.seed,
            topic_word: to_matrix(self.gamma, self.v)?,
            doc_topic: to_matrix(self.beta, self.k)?,
            vocab,
            doc_ids,
            assignments: Vec::new(),
            topic_word_counts: Array2::zeros((self.k, self.v)),
            doc_topic_counts: Array2::zeros((n, self.k)),
        })
    }
}
