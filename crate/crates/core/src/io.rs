//! System files. JSON documents are the canonical format; CSV matrices with
//! one-column asset sidecars are accepted as a convenience.
//!
//! The sink is stored explicitly as the last row and column.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FinancialSystem;

pub const SINK_LABEL: &str = "SINK";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub liabilities: Vec<Vec<f64>>,
    #[serde(default)]
    pub pre_shock_assets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_assets: Option<Vec<f64>>,
}

impl SystemDocument {
    pub fn from_system(system: &FinancialSystem, names: Option<Vec<String>>) -> Self {
        let l = system.liabilities();
        let external = (system.external_assets() != system.pre_shock_assets())
            .then(|| system.external_assets().iter().copied().collect());
        Self {
            names,
            liabilities: l.row_iter().map(|r| r.iter().copied().collect()).collect(),
            pre_shock_assets: Some(system.pre_shock_assets().iter().copied().collect()),
            external_assets: external,
        }
    }

    pub fn to_system(&self) -> Result<FinancialSystem> {
        let n = self.liabilities.len();
        for (row, values) in self.liabilities.iter().enumerate() {
            if values.len() != n {
                return Err(Error::Validation(format!(
                    "liabilities row {row} has {} entries, expected {n}",
                    values.len()
                )));
            }
        }
        if let Some(names) = &self.names {
            let ok = names.len() + 1 == n
                || (names.len() == n && names.last().map(String::as_str) == Some(SINK_LABEL));
            if !ok {
                return Err(Error::Validation(format!(
                    "names must list the {} banks, optionally followed by \"{SINK_LABEL}\"",
                    n.saturating_sub(1)
                )));
            }
        }
        let o = self
            .pre_shock_assets
            .as_ref()
            .ok_or_else(|| Error::Validation("pre_shock_assets required".into()))?;
        let matrix = DMatrix::from_fn(n, n, |i, j| self.liabilities[i][j]);
        FinancialSystem::new(
            matrix,
            DVector::from_column_slice(o),
            self.external_assets
                .as_ref()
                .map(|a| DVector::from_column_slice(a)),
        )
    }

    /// Bank labels followed by the sink label, defaulting to `B1..`.
    pub fn labels(&self) -> Vec<String> {
        let banks = self.liabilities.len().saturating_sub(1);
        let mut out: Vec<String> = match &self.names {
            Some(names) => names.iter().take(banks).cloned().collect(),
            None => (1..=banks).map(|i| format!("B{i}")).collect(),
        };
        out.push(SINK_LABEL.to_string());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.csv` means CSV; anything else is read as JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// One-column asset files supplied next to the liability matrix. For JSON
/// input they override the document's values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sidecars<'a> {
    pub pre_shock_assets: Option<&'a Path>,
    pub external_assets: Option<&'a Path>,
}

pub fn parse_json(text: &str) -> Result<SystemDocument> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn to_json(doc: &SystemDocument) -> String {
    serde_json::to_string_pretty(doc).expect("documents always serialize")
}

fn is_numeric_row(record: &csv::StringRecord) -> bool {
    record.iter().all(|f| f.trim().parse::<f64>().is_ok())
}

fn csv_records(text: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, record));
    }
    Ok(out)
}

fn parse_field(line: usize, column: usize, field: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("not a number: {field:?}"),
    })
}

/// Optional header labels and the numeric rows.
pub type CsvMatrix = (Option<Vec<String>>, Vec<Vec<f64>>);

/// A square numeric matrix, optionally preceded by a header row of labels.
pub fn parse_csv_matrix(text: &str) -> Result<CsvMatrix> {
    let mut records = csv_records(text)?;
    let header = match records.first() {
        Some((_, first)) if !is_numeric_row(first) => {
            let (_, h) = records.remove(0);
            Some(h.iter().map(str::to_string).collect::<Vec<_>>())
        }
        _ => None,
    };
    let n = records.len();
    let mut rows = Vec::with_capacity(n);
    for (line, record) in &records {
        if record.len() != n {
            return Err(Error::Parse {
                line: *line,
                column: 0,
                message: format!("row has {} fields, expected {n}", record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, f)| parse_field(*line, col + 1, f))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if let Some(h) = &header {
        if h.len() != n {
            return Err(Error::Parse {
                line: 1,
                column: 0,
                message: format!("header has {} labels, expected {n}", h.len()),
            });
        }
    }
    Ok((header, rows))
}

/// A single column of numbers with an optional header.
pub fn parse_csv_vector(text: &str) -> Result<Vec<f64>> {
    let mut records = csv_records(text)?;
    if matches!(records.first(), Some((_, first)) if !is_numeric_row(first)) {
        records.remove(0);
    }
    records
        .iter()
        .map(|(line, record)| {
            if record.len() != 1 {
                return Err(Error::Parse {
                    line: *line,
                    column: 0,
                    message: format!("expected one column, found {}", record.len()),
                });
            }
            parse_field(*line, 1, &record[0])
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

pub fn load_document(
    path: &Path,
    format: Format,
    sidecars: Sidecars<'_>,
) -> Result<SystemDocument> {
    let text = read(path)?;
    let mut doc = match format {
        Format::Json => parse_json(&text)?,
        Format::Csv => {
            let (header, liabilities) = parse_csv_matrix(&text)?;
            SystemDocument {
                names: header,
                liabilities,
                pre_shock_assets: None,
                external_assets: None,
            }
        }
    };
    if let Some(p) = sidecars.pre_shock_assets {
        doc.pre_shock_assets = Some(parse_csv_vector(&read(p)?)?);
    }
    if let Some(p) = sidecars.external_assets {
        doc.external_assets = Some(parse_csv_vector(&read(p)?)?);
    }
    Ok(doc)
}

pub fn load_system(path: &Path, format: Format, sidecars: Sidecars<'_>) -> Result<FinancialSystem> {
    load_document(path, format, sidecars)?.to_system()
}

pub fn save_document(path: &Path, doc: &SystemDocument) -> Result<()> {
    fs::write(path, to_json(doc) + "\n")?;
    Ok(())
}
