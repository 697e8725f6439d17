use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

use super::{PipelineConfig, ProcessedDocument};

/// Ordered set of distinct terms with a term → column lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary that keeps the given column order.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, column: usize) -> &str {
        &self.terms[column]
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// `vocab.txt` layout: one term per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_terms(
            text.lines()
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Distinct tokens that occur in at least `min_document_frequency` documents,
/// in lexicographic order.
pub fn build_vocabulary(docs: &[ProcessedDocument], cfg: &PipelineConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    if docs.iter().all(ProcessedDocument::is_empty) {
        return Err(Error::EmptyCorpus(
            "no document has any token left after preprocessing".into(),
        ));
    }
    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *doc_freq.entry(t).or_default() += 1;
        }
    }
    let terms: Vec<String> = doc_freq
        .into_iter()
        .filter(|&(_, df)| df >= cfg.min_document_frequency)
        .map(|(t, _)| t.to_string())
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary {
            filter: "min-document-frequency",
        });
    }
    Vocabulary::from_terms(terms)
}
