use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{bundled, Lemmatizer, ProcessedDocument, RawDocument};

const EXTRA_PUNCTUATION: &str = "–—‘’“”…«»·•′″§¶";

/// Settings for [`preprocess`] and [`super::build_vocabulary`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stopwords: BTreeSet<String>,
    pub lemmatizer: Lemmatizer,
    pub punctuation: BTreeSet<char>,
    pub min_token_length: usize,
    pub min_document_frequency: usize,
    /// Keep only tokens whose tag is in this set. Untagged tokens always pass.
    pub pos_filter: Option<BTreeSet<String>>,
    pub allow_empty: bool,
    /// Drop tokens without a single alphabetic character ("1908", "99").
    pub drop_numeric: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stopwords: parse_stopwords(bundled::STOPWORDS),
            lemmatizer: Lemmatizer::bundled(),
            punctuation: default_punctuation(),
            min_token_length: 2,
            min_document_frequency: 1,
            pos_filter: None,
            allow_empty: false,
            drop_numeric: true,
        }
    }
}

pub fn default_punctuation() -> BTreeSet<char> {
    (0u8..128)
        .map(char::from)
        .filter(char::is_ascii_punctuation)
        .chain(EXTRA_PUNCTUATION.chars())
        .collect()
}

/// One word per line; text after `#` (or a Snowball-style `|`) is a comment.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split(['#', '|']).next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .map(str::to_lowercase)
        .collect()
}

impl PipelineConfig {
    pub fn load_stopwords(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = parse_stopwords(&text);
        Ok(())
    }

    pub fn load_lemmas(&mut self, path: &Path) -> Result<()> {
        self.lemmatizer = Lemmatizer::from_file(path)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_token_length < 1 {
            return Err(Error::Config("min-token-length must be at least 1".into()));
        }
        if self.min_document_frequency < 1 {
            return Err(Error::Config(
                "min-document-frequency must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn keeps(&self, token: &str) -> bool {
        token.chars().count() >= self.min_token_length
            && !self.stopwords.contains(token)
            && !(self.drop_numeric && !token.chars().any(char::is_alphabetic))
    }
}

/// Part-of-speech tagging hook. Returning `None` for a token leaves it untagged.
pub trait PosTagger: Sync {
    fn tag(&self, tokens: &[String]) -> Vec<Option<String>>;
}

/// Tags nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoopTagger;

impl PosTagger for NoopTagger {
    fn tag(&self, tokens: &[String]) -> Vec<Option<String>> {
        vec![None; tokens.len()]
    }
}

pub fn preprocess(doc: &RawDocument, cfg: &PipelineConfig) -> ProcessedDocument {
    preprocess_with_tagger(doc, cfg, &NoopTagger)
}

pub fn preprocess_with_tagger(
    doc: &RawDocument,
    cfg: &PipelineConfig,
    tagger: &dyn PosTagger,
) -> ProcessedDocument {
    let cleaned: String = doc
        .text
        .to_lowercase()
        .chars()
        .map(|c| if cfg.punctuation.contains(&c) { ' ' } else { c })
        .collect();

    let tokens: Vec<String> = cleaned
        .split_whitespace()
        .filter(|t| cfg.keeps(t))
        .map(|t| cfg.lemmatizer.lemmatize(t))
        // a lemma can land on a stop word or fall under the length floor
        .filter(|t| cfg.keeps(t))
        .collect();

    let tokens = match &cfg.pos_filter {
        None => tokens,
        Some(allowed) => {
            let tags = tagger.tag(&tokens);
            tokens
                .into_iter()
                .zip(tags)
                .filter(|(_, tag)| tag.as_ref().is_none_or(|t| allowed.contains(t)))
                .map(|(tok, _)| tok)
                .collect()
        }
    };

    ProcessedDocument {
        id: doc.id.clone(),
        tokens,
        label: doc.label.clone(),
    }
}

/// Preprocesses every document, in parallel, preserving input order.
pub fn preprocess_all(docs: &[RawDocument], cfg: &PipelineConfig) -> Vec<ProcessedDocument> {
    docs.par_iter().map(|d| preprocess(d, cfg)).collect()
}
