use std::path::{Path, PathBuf};

use mgdtm::corpus::{CorpusFormat, PipelineConfig};
use mgdtm::evaluation::{CoherenceConfig, Normalization};
use mgdtm::gaussian::EmConfig;
use mgdtm::lda::LdaConfig;
use mgdtm::vectorizer::LogBase;
use mgdtm::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Mgd,
    Lda,
    #[default]
    Both,
}

impl ModelChoice {
    pub fn mgd(self) -> bool {
        matches!(self, ModelChoice::Mgd | ModelChoice::Both)
    }

    pub fn lda(self) -> bool {
        matches!(self, ModelChoice::Lda | ModelChoice::Both)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct InputSection {
    pub source: Option<PathBuf>,
    pub format: Option<String>,
    /// Use the corpus shipped with the library.
    pub bundled: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct PipelineSection {
    pub stopwords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub min_token_length: usize,
    pub min_document_frequency: usize,
    pub allow_empty: bool,
    pub drop_numeric: bool,
    pub log_base: LogBase,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        PipelineSection {
            stopwords: None,
            lemmas: None,
            min_token_length: p.min_token_length,
            min_document_frequency: p.min_document_frequency,
            allow_empty: p.allow_empty,
            drop_numeric: p.drop_numeric,
            log_base: LogBase::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct SelectionSection {
    pub normalization: Normalization,
}

/// Everything a run needs. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSection,
    pub pipeline: PipelineSection,
    pub model: ModelChoice,
    pub seed: Option<u64>,
    pub top_n: usize,
    pub k_range: Option<[usize; 2]>,
    pub out: Option<PathBuf>,
    pub alpha: f64,
    pub em: EmConfig,
    pub lda: LdaConfig,
    pub coherence: CoherenceConfig,
    pub selection: SelectionSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: InputSection::default(),
            pipeline: PipelineSection::default(),
            model: ModelChoice::default(),
            seed: None,
            top_n: 10,
            k_range: None,
            out: None,
            alpha: 0.05,
            em: EmConfig::default(),
            lda: LdaConfig::default(),
            coherence: CoherenceConfig::default(),
            selection: SelectionSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn set_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.em.seed = s;
            self.lda.seed = s;
        }
    }

    pub fn set_k(&mut self, k: Option<usize>) {
        if let Some(k) = k {
            self.em.k = k;
            self.lda.k = k;
        }
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        self.out
            .clone()
            .ok_or_else(|| Error::Config("no output directory given (--out or `out` in the config)".into()))
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat> {
        match &self.input.format {
            Some(f) => f.parse(),
            None => match self.input.source.as_deref() {
                Some(p) if p.is_dir() => Ok(CorpusFormat::TxtDir),
                Some(p) if p.extension().is_some_and(|e| e == "csv") => Ok(CorpusFormat::Csv),
                _ => Ok(CorpusFormat::Jsonl),
            },
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        let mut cfg = PipelineConfig {
            min_token_length: p.min_token_length,
            min_document_frequency: p.min_document_frequency,
            allow_empty: p.allow_empty,
            drop_numeric: p.drop_numeric,
            ..PipelineConfig::default()
        };
        if let Some(path) = &p.stopwords {
            cfg.load_stopwords(path)?;
        }
        if let Some(path) = &p.lemmas {
            cfg.load_lemmas(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::Config("top-n must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        self.coherence.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_document() {
        let cfg: RunConfig = toml::from_str(
            r#"
            model = "mgd"
            seed = 7
            k-range = [2, 6]
            out = "run"

            [input]
            bundled = true

            [pipeline]
            min-document-frequency = 2
            log-base = "ten"

            [em]
            k = 4
            covariance = "full-shrinkage"
            shrinkage = 0.2

            [lda]
            iterations = 50
            burn-in = 10

            [coherence]
            window-size = 20

            [selection]
            normalization = "none"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model, ModelChoice::Mgd);
        assert_eq!(cfg.k_range, Some([2, 6]));
        assert_eq!(cfg.em.k, 4);
        assert_eq!(cfg.lda.burn_in, 10);
        assert_eq!(cfg.coherence.window_size, 20);
        assert_eq!(cfg.pipeline.log_base, LogBase::Ten);
        assert_eq!(cfg.selection.normalization, Normalization::None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("modle = \"mgd\"").is_err());
    }

    #[test]
    fn seed_applies_to_both_models() {
        let mut cfg = RunConfig::default();
        cfg.set_seed(Some(11));
        assert_eq!((cfg.em.seed, cfg.lda.seed), (11, 11));
    }
}
