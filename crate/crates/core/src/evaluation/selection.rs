//! Topic-count selection by comparing coherence with (normalized) log
//! perplexity over a range of K.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How log perplexities are rescaled before being compared with coherence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `(x - min) / (max - min)` over the successful rows.
    #[default]
    MinMax,
    /// Raw values.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub mean_cv: Option<f64>,
    pub log_perplexity: Option<f64>,
    pub normalized_perplexity: Option<f64>,
    /// `|mean_cv - normalized_perplexity|`.
    pub difference: Option<f64>,
    /// Set when fitting or scoring failed at this K.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweep {
    pub rows: Vec<SweepRow>,
    pub selected: usize,
    pub normalization: Normalization,
}

/// Evaluates every K in `range` with `evaluate` (returning mean Cv and log
/// perplexity) and selects the K minimizing the difference. Failed rows are
/// kept in the table and skipped by the selection; ties go to the smaller K.
pub fn select_topic_count<F>(
    range: RangeInclusive<usize>,
    n_docs: usize,
    normalization: Normalization,
    evaluate: F,
) -> Result<KSweep>
where
    F: Fn(usize) -> Result<(f64, f64)> + Sync,
{
    let (lo, hi) = (*range.start(), *range.end());
    if lo > hi {
        return Err(Error::Config(format!("empty K range {lo}..={hi}")));
    }
    if lo < 2 || hi > n_docs {
        return Err(Error::Config(format!(
            "K range {lo}..={hi} must lie within [2, {n_docs}]"
        )));
    }
    let mut rows: Vec<SweepRow> = range
        .into_par_iter()
        .map(|k| match evaluate(k) {
            Ok((cv, lp)) if cv.is_finite() && lp.is_finite() => SweepRow {
                k,
                mean_cv: Some(cv),
                log_perplexity: Some(lp),
                normalized_perplexity: None,
                difference: None,
                error: None,
            },
            Ok(_) => failed(k, "non-finite score".into()),
            Err(e) => failed(k, e.to_string()),
        })
        .collect();

    let ok = || rows.iter().filter_map(|r| r.log_perplexity);
    let (min, max) = ok().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if min > max {
        return Err(Error::Data("no K in the range could be fitted".into()));
    }
    for row in &mut rows {
        if let (Some(cv), Some(lp)) = (row.mean_cv, row.log_perplexity) {
            let norm = match normalization {
                Normalization::MinMax if max > min => (lp - min) / (max - min),
                Normalization::MinMax => 0.0,
                Normalization::None => lp,
            };
            row.normalized_perplexity = Some(norm);
            row.difference = Some((cv - norm).abs());
        }
    }
    let selected = rows
        .iter()
        .filter_map(|r| r.difference.map(|d| (r.k, d)))
        .fold(None, |best: Option<(usize, f64)>, (k, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((k, d)),
        })
        .map(|(k, _)| k)
        .expect("at least one successful row");
    Ok(KSweep {
        rows,
        selected,
        normalization,
    })
}

fn failed(k: usize, error: String) -> SweepRow {
    SweepRow {
        k,
        mean_cv: None,
        log_perplexity: None,
        normalized_perplexity: None,
        difference: None,
        error: Some(error),
    }
}
