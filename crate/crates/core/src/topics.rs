//! Topics as mixture components.
//!
//! Every component of the document mixture is one topic. Keywords are ranked
//! by the mean-covariance contribution of each term,
//!
//! ```text
//! score_i = μ_i · Σ_j σ_ij²
//! ```
//!
//! where `μ_i` is the topic's mean TF-IDF for term `i` and `σ_ij` runs over row
//! `i` of the topic's full covariance, diagonal included. Squaring keeps
//! positive and negative covariances from cancelling.

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::gaussian::{
    argmax, e_step, fit_em, log_density, log_sum_exp, weighted_moments, CovarianceMode, EmConfig,
    GmmModel, Responsibilities,
};
use crate::vectorizer::DocTermMatrix;

/// A fitted mixture read as a topic model.
#[derive(Debug, Clone)]
pub struct MgdTopicModel {
    pub gmm: GmmModel,
    pub vocab: Vocabulary,
    pub doc_ids: Vec<String>,
    /// Per-topic mean TF-IDF vectors used for scoring.
    pub topic_means: Vec<Array1<f64>>,
    /// Per-topic full V×V covariances used for scoring.
    pub topic_covariances: Vec<Array2<f64>>,
    pub responsibilities: Responsibilities,
    /// Argmax topic of every training document.
    pub assignments: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub term: String,
    pub smcc: f64,
    pub mean_tfidf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicKeywords {
    pub topic: usize,
    pub keywords: Vec<KeywordEntry>,
}

impl TopicKeywords {
    pub fn terms(&self) -> Vec<String> {
        self.keywords.iter().map(|k| k.term.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicAssignment {
    pub topic: usize,
    pub responsibility: f64,
    /// Set when the winning posterior is below `1/K + 0.1` (only for K ≥ 2).
    pub low_confidence: bool,
}

/// Fits the document mixture and derives the per-topic scoring statistics.
pub fn fit_topics(dtm: &DocTermMatrix, cfg: &EmConfig) -> Result<MgdTopicModel> {
    let (gmm, resp) = fit_em(dtm.values.view(), cfg)?;
    MgdTopicModel::from_fitted(gmm, resp, dtm)
}

impl MgdTopicModel {
    /// Builds the topic model for a mixture already fitted to `dtm`.
    ///
    /// With diagonal EM the full covariances needed for scoring are estimated
    /// afterwards from the final responsibilities (weighted mean, then
    /// weighted covariance about that mean). With full covariances the
    /// component's own mean and matrix are used.
    pub fn from_fitted(gmm: GmmModel, resp: Responsibilities, dtm: &DocTermMatrix) -> Result<Self> {
        let (n, v) = dtm.values.dim();
        if gmm.dim() != v || resp.matrix.nrows() != n || resp.matrix.ncols() != gmm.k() {
            return Err(Error::Mismatch(format!(
                "model (K={}, V={}) does not fit a {n}×{v} matrix",
                gmm.k(),
                gmm.dim()
            )));
        }
        let mut topic_means = Vec::with_capacity(gmm.k());
        let mut topic_covariances = Vec::with_capacity(gmm.k());
        for (j, c) in gmm.mixture.components.iter().enumerate() {
            match gmm.config.covariance {
                CovarianceMode::FullShrinkage => {
                    topic_means.push(c.mean.clone());
                    topic_covariances.push(c.cov.to_dense());
                }
                CovarianceMode::Diagonal => {
                    let w = resp.matrix.column(j);
                    if w.sum() > 0.0 {
                        let (_, mean, cov) = weighted_moments(dtm.values.view(), w);
                        topic_means.push(mean);
                        topic_covariances.push(cov);
                    } else {
                        topic_means.push(Array1::zeros(v));
                        topic_covariances.push(Array2::zeros((v, v)));
                    }
                }
            }
        }
        let assignments = resp.argmax();
        Ok(MgdTopicModel {
            gmm,
            vocab: dtm.vocab.clone(),
            doc_ids: dtm.doc_ids.clone(),
            topic_means,
            topic_covariances,
            responsibilities: resp,
            assignments,
        })
    }

    /// Re-attaches a stored mixture to the matrix it was fitted on.
    pub fn from_stored(gmm: GmmModel, dtm: &DocTermMatrix) -> Result<Self> {
        if gmm.dim() != dtm.n_terms() {
            return Err(Error::Mismatch(format!(
                "model has V={} but the corpus vocabulary has {} terms",
                gmm.dim(),
                dtm.n_terms()
            )));
        }
        let (resp, _) = e_step(dtm.values.view(), &gmm.mixture)?;
        Self::from_fitted(gmm, resp, dtm)
    }

    pub fn k(&self) -> usize {
        self.gmm.k()
    }

    fn check_topic(&self, topic: usize) -> Result<()> {
        if topic >= self.k() {
            return Err(Error::Config(format!(
                "topic {topic} out of range (K = {})",
                self.k()
            )));
        }
        Ok(())
    }

    /// Mean-covariance contribution of every term to `topic`.
    pub fn smcc(&self, topic: usize) -> Result<Vec<f64>> {
        self.check_topic(topic)?;
        Ok(smcc_scores(
            self.topic_means[topic].view(),
            &self.topic_covariances[topic],
        ))
    }

    /// The `n` highest-scoring terms, ties broken lexicographically.
    pub fn top_keywords(&self, topic: usize, n: usize) -> Result<TopicKeywords> {
        let v = self.vocab.len();
        if n == 0 || n > v {
            return Err(Error::Config(format!(
                "requested {n} keywords but the vocabulary has {v} terms"
            )));
        }
        let scores = self.smcc(topic)?;
        let mean = &self.topic_means[topic];
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.vocab.term(a).cmp(self.vocab.term(b)))
        });
        Ok(TopicKeywords {
            topic,
            keywords: order
                .into_iter()
                .take(n)
                .map(|i| KeywordEntry {
                    term: self.vocab.term(i).to_string(),
                    smcc: scores[i],
                    mean_tfidf: mean[i],
                })
                .collect(),
        })
    }

    pub fn all_keywords(&self, n: usize) -> Result<Vec<TopicKeywords>> {
        (0..self.k()).map(|t| self.top_keywords(t, n)).collect()
    }

    /// Posterior-argmax topic for a new TF-IDF row.
    pub fn assign_topic(&self, row: ArrayView1<f64>) -> Result<TopicAssignment> {
        if row.len() != self.vocab.len() {
            return Err(Error::Data(format!(
                "row has {} entries, vocabulary has {}",
                row.len(),
                self.vocab.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("row contains non-finite values".into()));
        }
        let mix = &self.gmm.mixture;
        let logp = mix
            .components
            .iter()
            .zip(&mix.weights)
            .map(|(c, w)| Ok(w.ln() + log_density(row, c)?))
            .collect::<Result<Vec<f64>>>()?;
        let lse = log_sum_exp(&logp);
        if !lse.is_finite() {
            return Err(Error::Numerical("row has zero likelihood under every topic".into()));
        }
        let post: Vec<f64> = logp.iter().map(|lp| (lp - lse).exp()).collect();
        let topic = argmax(post.iter().copied());
        let k = post.len();
        Ok(TopicAssignment {
            topic,
            responsibility: post[topic],
            low_confidence: k > 1 && post[topic] < 1.0 / k as f64 + 0.1,
        })
    }
}

/// `score_i = mean_i · Σ_j cov_ij²`.
pub fn smcc_scores(mean: ArrayView1<f64>, cov: &Array2<f64>) -> Vec<f64> {
    cov.rows()
        .into_iter()
        .zip(mean)
        .map(|(row, &m)| m * row.iter().map(|s| s * s).sum::<f64>())
        .collect()
}

/// `{"topics": [{"topic", "keywords": [{"term", "smcc", "mean_tfidf"}]}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordReport {
    pub topics: Vec<TopicKeywords>,
}

impl KeywordReport {
    /// CSV with columns `topic,rank,term,smcc`; ranks start at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
        w.write_record(["topic", "rank", "term", "smcc"]).map_err(err)?;
        for t in &self.topics {
            for (rank, k) in t.keywords.iter().enumerate() {
                w.write_record([
                    t.topic.to_string(),
                    (rank + 1).to_string(),
                    k.term.clone(),
                    k.smcc.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}
