use std::collections::{HashMap, HashSet};
use std::io::Read;

use serde::Serialize;

use super::IngestError;

/// One data row keyed by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    line: u64,
    header: std::sync::Arc<[String]>,
    cells: Vec<String>,
}

impl RawRecord {
    pub fn new(line: u64, header: std::sync::Arc<[String]>, cells: Vec<String>) -> Self {
        assert_eq!(header.len(), cells.len(), "cells must align with header");
        Self { line, header, cells }
    }

    /// Build a record from `(column, cell)` pairs; mostly for tests and fixtures.
    pub fn from_pairs<'a>(line: u64, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let (header, cells): (Vec<String>, Vec<String>) =
            pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).unzip();
        Self::new(line, header.into(), cells)
    }

    /// 1-based line where the record starts.
    pub fn line(&self) -> u64 {
        self.line
    }

    pub fn get(&self, column: &str) -> Option<&str> {
        self.header.iter().position(|h| h == column).map(|i| self.cells[i].as_str())
    }

    pub fn has_column(&self, column: &str) -> bool {
        self.header.iter().any(|h| h == column)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.header.iter().map(String::as_str).zip(self.cells.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub header: Vec<String>,
    pub records: Vec<RawRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Maps alternative header spellings (e.g. `iyear`) onto codebook names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeaderAliases(HashMap<String, String>);

impl HeaderAliases {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: impl Into<String>, canonical: impl Into<String>) {
        self.0.insert(alias.into(), canonical.into());
    }

    /// Two-column delimited text `alias,canonical` with a header row.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let mut aliases = Self::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| IngestError::AliasMap(e.to_string()))?;
            if record.len() != 2 {
                return Err(IngestError::AliasMap(format!(
                    "row {} has {} columns, expected 2",
                    i + 2,
                    record.len()
                )));
            }
            aliases.insert(record[0].trim(), record[1].trim());
        }
        Ok(aliases)
    }

    pub fn resolve<'a>(&'a self, name: &'a str) -> &'a str {
        self.0.get(name).map(String::as_str).unwrap_or(name)
    }
}

/// Read a header row plus data rows. Quoting follows the usual rules (double
/// quote, doubled to escape); cells are kept verbatim. Ragged rows, rows with
/// an unbalanced quote and rows that are not UTF-8 are skipped with a
/// diagnostic.
pub fn parse_delimited<R: Read>(stream: R, delimiter: u8) -> Result<ParseOutput, IngestError> {
    parse_delimited_with_aliases(stream, delimiter, &HeaderAliases::default())
}

pub fn parse_delimited_with_aliases<R: Read>(
    mut stream: R,
    delimiter: u8,
    aliases: &HeaderAliases,
) -> Result<ParseOutput, IngestError> {
    let mut bytes = Vec::new();
    stream.read_to_end(&mut bytes)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_slice());

    let mut out = ParseOutput::default();
    let mut rows = reader.byte_records();
    let header_record = match rows.next() {
        Some(r) => r.map_err(|e| IngestError::Header(e.to_string()))?,
        None => return Err(IngestError::Header("missing header row".into())),
    };
    let mut seen = HashSet::new();
    for cell in header_record.iter() {
        let name = std::str::from_utf8(cell)
            .map_err(|_| IngestError::Header("header is not valid UTF-8".into()))?
            .trim();
        let name = aliases.resolve(name).to_string();
        if !seen.insert(name.clone()) {
            return Err(IngestError::Header(format!("duplicate column {name:?}")));
        }
        out.header.push(name);
    }
    let header: std::sync::Arc<[String]> = out.header.clone().into();

    let mut positions = Vec::new();
    let mut records = Vec::new();
    for row in rows {
        match row {
            Ok(record) => {
                let pos = record.position().expect("byte records carry positions");
                positions.push(pos.byte() as usize);
                records.push((pos.line(), record));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.diagnostics.push(Diagnostic { line, message: e.to_string() });
            }
        }
    }
    positions.push(bytes.len());

    for (i, (line, record)) in records.into_iter().enumerate() {
        // Every well-formed record has an even number of quote characters.
        let span = &bytes[positions[i]..positions[i + 1]];
        if span.iter().filter(|b| **b == b'"').count() % 2 == 1 {
            out.diagnostics.push(Diagnostic { line, message: "unbalanced quote".into() });
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            out.diagnostics.push(Diagnostic {
                line,
                message: format!("row has {} cells, header has {}", record.len(), header.len()),
            });
            continue;
        }
        let cells: Result<Vec<String>, _> =
            record.iter().map(|c| std::str::from_utf8(c).map(str::to_string)).collect();
        match cells {
            Ok(cells) => out.records.push(RawRecord::new(line, header.clone(), cells)),
            Err(_) => out.diagnostics.push(Diagnostic { line, message: "row is not valid UTF-8".into() }),
        }
    }
    Ok(out)
}
