//! Long-format feature matrix serialization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub participant: String,
    pub feature: String,
    pub slice: String,
    /// `None` is MISSING.
    pub value: Option<f64>,
}

impl FeatureRow {
    fn sort_key(&self) -> (&str, &str, &str) {
        (&self.participant, &self.feature, &self.slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

pub const HEADER: [&str; 4] = ["participant", "feature", "slice", "value"];

pub fn sort_rows(rows: &mut [FeatureRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Writes rows sorted by (participant, feature, slice).
pub fn write_matrix(rows: &[FeatureRow], path: &Path, format: Format) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut sorted: Vec<&FeatureRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let file = File::create(path).map_err(io_err)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record(HEADER)?;
            for r in sorted {
                let value = r.value.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([r.participant.as_str(), &r.feature, &r.slice, &value])?;
            }
            w.flush().map_err(io_err)?;
        }
        Format::Jsonl => {
            let mut w = BufWriter::new(file);
            for (i, r) in sorted.into_iter().enumerate() {
                serde_json::to_writer(&mut w, r).map_err(|source| OutputError::Json { line: i + 1, source })?;
                w.write_all(b"\n").map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn read_matrix_jsonl(path: &Path) -> Result<Vec<FeatureRow>, OutputError> {
    let file = File::open(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|source| OutputError::Json { line: i + 1, source })?);
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<FeatureRow>, OutputError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let value = match &record[3] {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|e| {
                OutputError::Csv(csv::Error::from(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    e,
                )))
            })?),
        };
        rows.push(FeatureRow {
            participant: record[0].to_string(),
            feature: record[1].to_string(),
            slice: record[2].to_string(),
            value,
        });
    }
    Ok(rows)
}
