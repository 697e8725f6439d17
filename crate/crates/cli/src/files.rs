use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mgdtm::corpus::{ProcessedDocument, Vocabulary};
use mgdtm::gaussian::GmmFile;
use mgdtm::lda::LdaFile;
use mgdtm::vectorizer::LogBase;
use mgdtm::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CORPUS: &str = "corpus.jsonl";
pub const VOCAB: &str = "vocab.txt";
pub const MODEL_MGD: &str = "model-mgd.json";
pub const MODEL_LDA: &str = "model-lda.json";
pub const KEYWORDS_MGD: &str = "keywords-mgd.csv";
pub const KEYWORDS_LDA: &str = "keywords-lda.csv";
pub const COHERENCE: &str = "coherence.csv";
pub const TTEST: &str = "ttest.json";
pub const KSWEEP: &str = "ksweep.csv";

/// A processed corpus together with its vocabulary and fingerprint.
pub struct Workspace {
    pub docs: Vec<ProcessedDocument>,
    pub vocab: Vocabulary,
    pub fingerprint: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MgdModelFile {
    pub corpus_sha256: String,
    pub log_base: LogBase,
    #[serde(flatten)]
    pub gmm: GmmFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LdaModelFile {
    pub corpus_sha256: String,
    #[serde(flatten)]
    pub lda: LdaFile,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("json: {e}")))?;
    text.push('\n');
    write(path, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn corpus_text(docs: &[ProcessedDocument]) -> Result<String> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d).map_err(|e| Error::Data(format!("json: {e}")))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn fingerprint(corpus: &[u8], vocab: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(corpus);
    h.update([0u8]);
    h.update(vocab);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Workspace {
    pub fn load(dir: &Path) -> Result<Self> {
        let corpus_path = dir.join(CORPUS);
        let vocab_path = dir.join(VOCAB);
        let corpus = read(&corpus_path)?;
        let vocab_bytes = read(&vocab_path)?;
        let text = String::from_utf8(corpus.clone())
            .map_err(|_| Error::Data(format!("{} is not UTF-8", corpus_path.display())))?;
        let mut docs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: ProcessedDocument = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                position: format!("{}:{}", corpus_path.display(), i + 1),
                message: e.to_string(),
            })?;
            docs.push(doc);
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus(format!("{} holds no documents", corpus_path.display())));
        }
        let vocab = Vocabulary::from_text(
            std::str::from_utf8(&vocab_bytes)
                .map_err(|_| Error::Data(format!("{} is not UTF-8", vocab_path.display())))?,
        )?;
        Ok(Workspace {
            docs,
            vocab,
            fingerprint: fingerprint(&corpus, &vocab_bytes),
        })
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.id.clone()).collect()
    }
}

pub fn check_fingerprint(found: &str, ws: &Workspace, path: &Path) -> Result<()> {
    if found == ws.fingerprint {
        Ok(())
    } else {
        Err(Error::Mismatch(format!(
            "{} was fitted on a different corpus than the one in this directory",
            path.display()
        )))
    }
}
