//! Document ingestion and text preprocessing.
//!
//! Raw documents are loaded from a directory of `.txt` files, a JSONL file or
//! a CSV file, then pushed through a fixed pipeline: lower-casing, punctuation
//! removal, whitespace tokenization, stop-word removal, a minimum token length,
//! dictionary-plus-suffix-rule lemmatization and an optional part-of-speech
//! filter. The surviving tokens feed [`build_vocabulary`].

mod lemma;
mod loader;
mod pipeline;
mod vocab;

pub use lemma::Lemmatizer;
pub use loader::{load_corpus, parse_csv, parse_jsonl, CorpusFormat};
pub use pipeline::{
    default_punctuation, parse_stopwords, preprocess, preprocess_all, preprocess_with_tagger,
    NoopTagger, PipelineConfig, PosTagger,
};
pub use vocab::{build_vocabulary, Vocabulary};

use serde::{Deserialize, Serialize};

/// A document as read from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A document after preprocessing: an ordered sequence of lemmas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedDocument {
    pub id: String,
    pub tokens: Vec<String>,
    /// Carried through from the raw document for purity checks and reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ProcessedDocument {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        ProcessedDocument {
            id: id.into(),
            tokens,
            label: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Assets shipped with the crate.
pub mod bundled {
    use super::{parse_jsonl, RawDocument};

    pub const STOPWORDS: &str = include_str!("../../assets/stopwords.txt");
    pub const LEMMAS: &str = include_str!("../../assets/lemmas.tsv");
    pub const SYNTHETIC_CORPUS: &str = include_str!("../../assets/synthetic_corpus.jsonl");

    /// The 18-document, three-topic (statistics, cricket, military) corpus.
    pub fn synthetic_corpus() -> Vec<RawDocument> {
        parse_jsonl(SYNTHETIC_CORPUS, false).expect("bundled corpus is well formed")
    }
}
