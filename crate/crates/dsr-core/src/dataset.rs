//! Line-delimited dataset and benchmark records.
//!
//! Training records carry `{question, options, answer, cot, language}`;
//! benchmark records add an `id` and optional `system` tag and drop the
//! rationale. Options are a label -> text map with labels contiguous from A.
//! All readers report line numbers on malformed input.

use crate::evaluation::{Language, McqItem};
use crate::rewards::Label;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub question: String,
    pub options: BTreeMap<String, String>,
    pub answer: String,
    pub cot: String,
    pub language: Language,
}

/// One benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub id: String,
    pub question: String,
    pub options: BTreeMap<String, String>,
    pub answer: String,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}

fn options_in_order(options: &BTreeMap<String, String>) -> Result<Vec<String>, DatasetError> {
    let mut texts = Vec::with_capacity(options.len());
    for (i, (key, text)) in options.iter().enumerate() {
        let expected = Label::from_index(i)
            .ok_or_else(|| DatasetError::Invalid(format!("too many options ({})", options.len())))?;
        if key != &expected.to_string() {
            return Err(DatasetError::Invalid(format!(
                "option labels must be contiguous from A; found {key:?} at position {i}"
            )));
        }
        texts.push(text.clone());
    }
    Ok(texts)
}

fn parse_gold(answer: &str) -> Result<Label, DatasetError> {
    Label::parse(answer)
        .ok_or_else(|| DatasetError::Invalid(format!("answer {answer:?} is not an option label")))
}

impl TrainRecord {
    pub fn gold(&self) -> Result<Label, DatasetError> {
        let gold = parse_gold(&self.answer)?;
        if gold.index() >= self.options.len() {
            return Err(DatasetError::Invalid(format!(
                "answer {gold} outside the {}-option set",
                self.options.len()
            )));
        }
        Ok(gold)
    }

    pub fn option_texts(&self) -> Result<Vec<String>, DatasetError> {
        options_in_order(&self.options)
    }
}

impl BenchRecord {
    pub fn to_item(&self) -> Result<McqItem, DatasetError> {
        let texts = options_in_order(&self.options)?;
        McqItem::new(
            self.id.clone(),
            self.question.clone(),
            texts,
            parse_gold(&self.answer)?,
            self.language,
            self.system.clone(),
        )
        .map_err(|e| DatasetError::Invalid(e.to_string()))
    }

    pub fn from_item(item: &McqItem) -> Self {
        BenchRecord {
            id: item.id().to_string(),
            question: item.question.clone(),
            options: item
                .options()
                .iter()
                .map(|(l, t)| (l.to_string(), t.clone()))
                .collect(),
            answer: item.gold().to_string(),
            language: item.language,
            system: item.system.clone(),
        }
    }
}

/// Parses one training-record line. Exposed for fuzzing.
pub fn parse_train_line(line: &str) -> Result<TrainRecord, serde_json::Error> {
    serde_json::from_str(line)
}

/// Parses one benchmark-record line. Exposed for fuzzing.
pub fn parse_bench_line(line: &str) -> Result<BenchRecord, serde_json::Error> {
    serde_json::from_str(line)
}

fn read_lines<T>(
    path: &Path,
    parse: impl Fn(&str) -> Result<T, serde_json::Error>,
) -> Result<Vec<T>, DatasetError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_train_records(path: &Path) -> Result<Vec<TrainRecord>, DatasetError> {
    read_lines(path, parse_train_line)
}

pub fn read_bench_items(path: &Path) -> Result<Vec<McqItem>, DatasetError> {
    let records = read_lines(path, parse_bench_line)?;
    records.iter().map(|r| r.to_item()).collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| DatasetError::Invalid(e.to_string()))?;
        out.push(b'\n');
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_line() -> String {
        r#"{"question":"q one","options":{"A":"ta","B":"tb"},"answer":"B","cot":"r1 r2","language":"hi"}"#
            .to_string()
    }

    #[test]
    fn train_record_round_trip() {
        let rec = parse_train_line(&record_line()).unwrap();
        assert_eq!(rec.language, Language::Hi);
        assert_eq!(rec.gold().unwrap(), Label::new('B').unwrap());
        assert_eq!(rec.option_texts().unwrap(), vec!["ta".to_string(), "tb".to_string()]);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(parse_train_line(&json).unwrap(), rec);
    }

    #[test]
    fn non_contiguous_labels_are_rejected() {
        let rec = parse_train_line(
            r#"{"question":"q","options":{"A":"x","C":"y"},"answer":"A","cot":"","language":"en"}"#,
        )
        .unwrap();
        assert!(rec.option_texts().is_err());

        let rec = parse_train_line(
            r#"{"question":"q","options":{"A":"x","B":"y"},"answer":"E","cot":"","language":"en"}"#,
        )
        .unwrap();
        assert!(rec.gold().is_err());
    }

    #[test]
    fn bench_record_to_item_and_back() {
        let line = r#"{"id":"b1","question":"pick","options":{"A":"x","B":"y"},"answer":"A","language":"en"}"#;
        let rec = parse_bench_line(line).unwrap();
        let item = rec.to_item().unwrap();
        assert_eq!(item.id(), "b1");
        assert_eq!(item.gold(), Label::new('A').unwrap());
        assert_eq!(BenchRecord::from_item(&item), rec);
        // system defaults to None and is omitted on write.
        assert!(!serde_json::to_string(&rec).unwrap().contains("system"));
    }

    #[test]
    fn file_round_trip_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let rec = parse_train_line(&record_line()).unwrap();
        write_jsonl(&path, &[rec.clone(), rec.clone()]).unwrap();
        let back = read_train_records(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], rec);

        std::fs::write(&path, "{}\nnot json\n").unwrap();
        let err = read_train_records(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":1:"), "line number missing in {msg}");
    }
}
