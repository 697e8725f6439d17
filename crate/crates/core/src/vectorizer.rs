//! TF-IDF document-term matrix.
//!
//! Entry `(d, t)` is `(n_t / N_d) * log(K / K_t)` where `n_t` counts term `t`
//! in document `d`, `N_d` is the document's token count (out-of-vocabulary
//! tokens included), `K` is the number of documents and `K_t` the number of
//! documents containing `t`.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ProcessedDocument, Vocabulary};
use crate::error::{Error, Result};

pub const DTM_MAGIC: [u8; 4] = *b"DTMX";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }

    fn code(self) -> u32 {
        match self {
            LogBase::Natural => 0,
            LogBase::Two => 1,
            LogBase::Ten => 2,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(LogBase::Natural),
            1 => Ok(LogBase::Two),
            2 => Ok(LogBase::Ten),
            c => Err(Error::Data(format!("unknown log-base code {c} in matrix header"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TfidfConfig {
    pub log_base: LogBase,
    /// Accept documents without tokens; they produce all-zero rows.
    pub allow_empty: bool,
}

/// N×V matrix of TF-IDF weights.
#[derive(Debug, Clone)]
pub struct DocTermMatrix {
    pub values: Array2<f64>,
    pub doc_ids: Vec<String>,
    pub vocab: Vocabulary,
    pub log_base: LogBase,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.values.ncols()
    }
}

pub fn tfidf(docs: &[ProcessedDocument], vocab: &Vocabulary, cfg: &TfidfConfig) -> Result<DocTermMatrix> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("no documents to vectorize".into()));
    }
    if vocab.is_empty() {
        return Err(Error::Data("vocabulary is empty".into()));
    }
    if !cfg.allow_empty {
        if let Some(d) = docs.iter().find(|d| d.tokens.is_empty()) {
            return Err(Error::Data(format!(
                "document {:?} has no tokens (allow-empty is not set)",
                d.id
            )));
        }
    }

    let v = vocab.len();
    // sequential document-frequency pass
    let mut doc_freq = vec![0usize; v];
    let mut seen = vec![usize::MAX; v];
    for (d, doc) in docs.iter().enumerate() {
        for tok in &doc.tokens {
            if let Some(t) = vocab.position(tok) {
                if seen[t] != d {
                    seen[t] = d;
                    doc_freq[t] += 1;
                }
            }
        }
    }
    let k = docs.len() as f64;
    let idf: Vec<f64> = doc_freq
        .iter()
        .map(|&kt| if kt == 0 { 0.0 } else { cfg.log_base.log(k / kt as f64) })
        .collect();

    let rows: Vec<Vec<f64>> = docs
        .par_iter()
        .map(|doc| {
            let mut row = vec![0.0; v];
            if doc.tokens.is_empty() {
                return row;
            }
            for tok in &doc.tokens {
                if let Some(t) = vocab.position(tok) {
                    row[t] += 1.0;
                }
            }
            let len = doc.tokens.len() as f64;
            for (x, w) in row.iter_mut().zip(&idf) {
                *x = *x / len * w;
            }
            row
        })
        .collect();

    let mut values = Array2::zeros((docs.len(), v));
    for (d, row) in rows.into_iter().enumerate() {
        for (t, x) in row.into_iter().enumerate() {
            values[[d, t]] = x;
        }
    }
    Ok(DocTermMatrix {
        values,
        doc_ids: docs.iter().map(|d| d.id.clone()).collect(),
        vocab: vocab.clone(),
        log_base: cfg.log_base,
    })
}

/// CSV dump: a header of vocabulary terms, then one row per document.
pub fn write_csv<W: Write>(dtm: &DocTermMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    w.write_record(dtm.vocab.terms()).map_err(csv_err)?;
    for row in dtm.values.rows() {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Binary dump: 16-byte little-endian header `{"DTMX", u32 N, u32 V, u32 flags}`
/// followed by the values in column-major order as little-endian f64.
/// Bits 0-1 of `flags` encode the logarithm base (0 natural, 1 base 2, 2 base 10).
pub fn write_binary<W: Write>(dtm: &DocTermMatrix, mut out: W) -> Result<()> {
    let to_u32 = |x: usize| {
        u32::try_from(x).map_err(|_| Error::Data("matrix dimension exceeds u32".into()))
    };
    let mut buf = Vec::with_capacity(16 + 8 * dtm.values.len());
    buf.extend_from_slice(&DTM_MAGIC);
    buf.extend_from_slice(&to_u32(dtm.n_docs())?.to_le_bytes());
    buf.extend_from_slice(&to_u32(dtm.n_terms())?.to_le_bytes());
    buf.extend_from_slice(&dtm.log_base.code().to_le_bytes());
    for col in dtm.values.columns() {
        for x in col {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.write_all(&buf).map_err(|e| Error::io("<binary dump>", e))
}

/// Reads a binary dump back into `(values, log_base)`.
pub fn read_binary<R: Read>(mut input: R) -> Result<(Array2<f64>, LogBase)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<binary dump>", e))?;
    if bytes.len() < 16 || bytes[..4] != DTM_MAGIC {
        return Err(Error::Data("not a DTMX matrix dump".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (n, v, flags) = (word(4) as usize, word(8) as usize, word(12));
    if bytes.len() != 16 + 8 * n * v {
        return Err(Error::Data(format!(
            "matrix dump length {} does not match {n}x{v}",
            bytes.len()
        )));
    }
    let mut values = Array2::zeros((n, v));
    for t in 0..v {
        for d in 0..n {
            let at = 16 + 8 * (t * n + d);
            values[[d, t]] = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        }
    }
    Ok((values, LogBase::from_code(flags & 0b11)?))
}

pub fn write_binary_file(dtm: &DocTermMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_binary(dtm, std::io::BufWriter::new(file))
}
