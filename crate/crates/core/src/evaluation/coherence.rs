//! Cv topic coherence.
//!
//! Word and word-pair probabilities come from boolean sliding windows over
//! the reference documents. Each topic word gets a vector of NPMI values
//! against every word of its topic; the topic vector is the sum of those
//! vectors, and a word's score is the cosine between its vector and the topic
//! vector. Cv averages the scores over all words of all topics.

use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ProcessedDocument;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct CoherenceConfig {
    /// Only the first `top_n` words of each topic list are scored.
    pub top_n: usize,
    pub window_size: usize,
    /// Added to joint probabilities inside the NPMI logarithm.
    pub npmi_epsilon: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            top_n: 10,
            window_size: 110,
            npmi_epsilon: 1e-12,
        }
    }
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n < 2 {
            return Err(Error::Config("coherence top-n must be at least 2".into()));
        }
        if self.window_size < 1 {
            return Err(Error::Config("coherence window size must be at least 1".into()));
        }
        if !(self.npmi_epsilon > 0.0 && self.npmi_epsilon < 1.0) {
            return Err(Error::Config("NPMI epsilon must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Window occurrence counts for a fixed word list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCounts {
    pub windows: u64,
    /// `joint[[i, j]]`: windows containing both word `i` and word `j`; the
    /// diagonal holds single-word counts.
    pub joint: Array2<u64>,
}

/// Counts boolean windows of `window` consecutive tokens. A document shorter
/// than the window is a single window; an empty document contributes none.
pub fn window_counts(docs: &[ProcessedDocument], words: &[String], window: usize) -> WindowCounts {
    let m = words.len();
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    docs.par_iter()
        .map(|doc| {
            let ids: Vec<Option<usize>> = doc.tokens.iter().map(|t| index.get(t.as_str()).copied()).collect();
            let mut joint = Array2::<u64>::zeros((m, m));
            let mut windows = 0;
            if ids.is_empty() {
                return WindowCounts { windows, joint };
            }
            let width = window.min(ids.len());
            let mut inside = vec![0usize; m];
            for id in ids[..width].iter().flatten() {
                inside[*id] += 1;
            }
            let mut present = Vec::with_capacity(m);
            for start in 0..=(ids.len() - width) {
                if start > 0 {
                    if let Some(out) = ids[start - 1] {
                        inside[out] -= 1;
                    }
                    if let Some(inn) = ids[start + width - 1] {
                        inside[inn] += 1;
                    }
                }
                windows += 1;
                present.clear();
                present.extend((0..m).filter(|&i| inside[i] > 0));
                for (a, &i) in present.iter().enumerate() {
                    for &j in &present[a..] {
                        joint[[i, j]] += 1;
                        if i != j {
                            joint[[j, i]] += 1;
                        }
                    }
                }
            }
            WindowCounts { windows, joint }
        })
        .reduce(
            || WindowCounts {
                windows: 0,
                joint: Array2::zeros((m, m)),
            },
            |mut a, b| {
                a.windows += b.windows;
                a.joint += &b.joint;
                a
            },
        )
}

/// `ln((p_ij + ε) / (p_i p_j)) / -ln(p_ij + ε)`. Words that occur in every
/// window together score 1; a word that never occurs scores 0.
pub fn npmi(p_i: f64, p_j: f64, p_ij: f64, epsilon: f64) -> f64 {
    if p_i == 0.0 || p_j == 0.0 {
        return 0.0;
    }
    if p_ij >= 1.0 {
        return 1.0;
    }
    let joint = p_ij + epsilon;
    let denom = -joint.ln();
    if denom <= 0.0 {
        return 1.0;
    }
    (joint / (p_i * p_j)).ln() / denom
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    /// Topic words that occur in no window; their NPMI entries are zero.
    pub missing_words: Vec<String>,
    pub config: CoherenceConfig,
}

/// Cv coherence of each topic's word list against `docs`.
pub fn cv_coherence(
    topics: &[Vec<String>],
    docs: &[ProcessedDocument],
    cfg: &CoherenceConfig,
) -> Result<CoherenceReport> {
    cfg.validate()?;
    if topics.is_empty() {
        return Err(Error::Config("no topics to score".into()));
    }
    if docs.iter().all(|d| d.tokens.is_empty()) {
        return Err(Error::EmptyCorpus("coherence reference corpus has no tokens".into()));
    }
    let topics: Vec<&[String]> = topics.iter().map(|t| &t[..t.len().min(cfg.top_n)]).collect();
    if let Some(t) = topics.iter().position(|t| t.len() < 2) {
        return Err(Error::Config(format!("topic {t} has fewer than two words")));
    }

    let mut words: Vec<String> = topics.iter().flat_map(|t| t.iter().cloned()).collect();
    words.sort();
    words.dedup();
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let counts = window_counts(docs, &words, cfg.window_size);
    let total = counts.windows as f64;
    let p = |i: usize, j: usize| counts.joint[[i, j]] as f64 / total;

    let missing_words: Vec<String> = words
        .iter()
        .enumerate()
        .filter(|&(i, _)| counts.joint[[i, i]] == 0)
        .map(|(_, w)| w.clone())
        .collect();

    let per_topic: Vec<f64> = topics
        .iter()
        .map(|topic| {
            let ids: Vec<usize> = topic.iter().map(|w| index[w.as_str()]).collect();
            let vectors: Vec<Vec<f64>> = ids
                .iter()
                .map(|&i| {
                    ids.iter()
                        .map(|&j| npmi(p(i, i), p(j, j), p(i, j), cfg.npmi_epsilon))
                        .collect()
                })
                .collect();
            let mut topic_vector = vec![0.0; ids.len()];
            for v in &vectors {
                for (t, x) in topic_vector.iter_mut().zip(v) {
                    *t += x;
                }
            }
            vectors.iter().map(|v| cosine(v, &topic_vector)).sum::<f64>() / ids.len() as f64
        })
        .collect();
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport {
        per_topic,
        mean,
        missing_words,
        config: cfg.clone(),
    })
}
