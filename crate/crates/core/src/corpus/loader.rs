use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::RawDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// A directory of `.txt` files; the file stem is the document id.
    TxtDir,
    /// One JSON object per line: `{"id"?, "text", "label"?}`.
    Jsonl,
    /// Header `id,text[,label]`.
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "txt-dir" => Ok(CorpusFormat::TxtDir),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Config(format!(
                "unknown corpus format {other:?} (expected txt-dir, jsonl or csv)"
            ))),
        }
    }
}

pub fn load_corpus(source: &Path, format: CorpusFormat, allow_empty: bool) -> Result<Vec<RawDocument>> {
    match format {
        CorpusFormat::TxtDir => load_txt_dir(source, allow_empty),
        CorpusFormat::Jsonl => {
            let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
            parse_jsonl(&text, allow_empty)
        }
        CorpusFormat::Csv => {
            let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
            parse_csv(&text, allow_empty)
        }
    }
}

/// Tracks ids so that both explicit and derived duplicates are rejected.
struct IdSet(HashSet<String>);

impl IdSet {
    fn insert(&mut self, id: &str) -> Result<()> {
        if self.0.insert(id.to_string()) {
            Ok(())
        } else {
            Err(Error::DuplicateId(id.to_string()))
        }
    }
}

fn check_text(text: &str, allow_empty: bool, position: impl FnOnce() -> String) -> Result<()> {
    if !allow_empty && text.trim().is_empty() {
        return Err(Error::MalformedRecord {
            position: position(),
            message: "empty text (set allow-empty to accept)".into(),
        });
    }
    Ok(())
}

fn load_txt_dir(dir: &Path, allow_empty: bool) -> Result<Vec<RawDocument>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "txt") {
            paths.push(path);
        }
    }
    paths.sort();

    let mut ids = IdSet(HashSet::new());
    let mut docs = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        check_text(&text, allow_empty, || path.display().to_string())?;
        ids.insert(&id)?;
        docs.push(RawDocument { id, text, label: None });
    }
    Ok(docs)
}

#[derive(Deserialize)]
struct Record {
    #[serde(default)]
    id: Option<String>,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

/// Parses JSONL text. Blank lines are skipped; a missing id becomes `line-N`.
pub fn parse_jsonl(text: &str, allow_empty: bool) -> Result<Vec<RawDocument>> {
    let mut ids = IdSet(HashSet::new());
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            position: format!("line {lineno}"),
            message: e.to_string(),
        })?;
        check_text(&rec.text, allow_empty, || format!("line {lineno}"))?;
        let id = rec
            .id
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("line-{lineno}"));
        ids.insert(&id)?;
        docs.push(RawDocument {
            id,
            text: rec.text,
            label: rec.label,
        });
    }
    Ok(docs)
}

/// Parses CSV text with a header naming `id`, `text` and optionally `label`.
pub fn parse_csv(text: &str, allow_empty: bool) -> Result<Vec<RawDocument>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedRecord {
            position: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, text_col) = match (column("id"), column("text")) {
        (Some(i), Some(t)) => (i, t),
        _ => {
            return Err(Error::MalformedRecord {
                position: "header".into(),
                message: "expected columns id,text[,label]".into(),
            })
        }
    };
    let label_col = column("label");

    let mut ids = IdSet(HashSet::new());
    let mut docs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rowno = i + 1;
        let rec = rec.map_err(|e| Error::MalformedRecord {
            position: format!("row {rowno}"),
            message: e.to_string(),
        })?;
        let text = rec.get(text_col).ok_or_else(|| Error::MalformedRecord {
            position: format!("row {rowno}"),
            message: "missing text column".into(),
        })?;
        check_text(text, allow_empty, || format!("row {rowno}"))?;
        let id = match rec.get(id_col).map(str::trim) {
            Some(s) if !s.is_empty() => s.to_string(),
            _ => format!("row-{rowno}"),
        };
        ids.insert(&id)?;
        let label = label_col
            .and_then(|c| rec.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        docs.push(RawDocument {
            id,
            text: text.to_string(),
            label,
        });
    }
    Ok(docs)
}
