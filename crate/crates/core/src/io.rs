//! JSONL readers for corpus, gold judgment and training pair files.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalkit::GoldJudgment;
use crate::index::Document;

/// One line of a training pair file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPair {
    pub text_a: String,
    pub text_b: String,
    pub label: u8,
}

/// Parses one JSON value per non-blank line, reporting 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(path, i + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    read_jsonl(path)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldJudgment>> {
    read_jsonl(path)
}

pub fn load_pairs(path: &Path) -> Result<Vec<TextPair>> {
    let pairs: Vec<TextPair> = read_jsonl(path)?;
    if let Some((i, p)) = pairs.iter().enumerate().find(|(_, p)| p.label > 1) {
        return Err(Error::Validation(format!(
            "{}: pair {} has label {}, expected 0 or 1",
            path.display(),
            i + 1,
            p.label
        )));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn reads_lines_and_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            "{\"id\":\"d1\",\"title\":\"t\",\"body\":\"b\"}\n\n{\"id\":\"d2\",\"body\":\"x\",\"url\":\"http://e\"}\n",
        )
        .unwrap();
        let docs = load_corpus(&path).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].url.as_deref(), Some("http://e"));

        fs::write(&path, "{\"id\":\"d1\",\"body\":\"b\"}\n{\"id\":\n").unwrap();
        assert!(matches!(load_corpus(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_bad_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        fs::write(&path, "{\"text_a\":\"a\",\"text_b\":\"b\",\"label\":2}\n").unwrap();
        assert!(matches!(load_pairs(&path), Err(Error::Validation(_))));
    }
}
