//! Delimited flat files to typed, validated incidents, plus synthetic fixtures.

mod casualties;
mod decode;
mod incident;
mod reader;
mod synth;
mod validate;
mod violation;

use std::io::Read;

pub use casualties::distribute_casualties;
pub use decode::decode_record;
pub use incident::{
    write_incidents, ClaimSlot, Incident, PerpetratorSlot, TargetSlot, WeaponSlot, COLUMNS,
    REQUIRED_COLUMNS,
};
pub use reader::{
    parse_delimited, parse_delimited_with_aliases, Diagnostic, HeaderAliases, ParseOutput, RawRecord,
};
pub use synth::{generate_synthetic, GeneratorProfile};
pub use validate::validate_incident;
pub use violation::{write_report, Rule, Severity, Violation, REPORT_COLUMNS};

use crate::codebook::CodebookTables;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("bad header alias map: {0}")]
    AliasMap(String),
    #[error("cannot distribute casualties over an empty list of incidents")]
    EmptyLinkedList,
    #[error("invalid generator profile: {0}")]
    InvalidProfile(String),
}

/// A decoded record with every violation found for it, decode and
/// validation combined.
#[derive(Debug, Clone)]
pub struct CheckedIncident {
    pub line: u64,
    pub incident: Incident,
    pub violations: Vec<Violation>,
}

impl CheckedIncident {
    pub fn has_errors(&self) -> bool {
        self.violations.iter().any(Violation::is_error)
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<CheckedIncident>,
    pub diagnostics: Vec<Diagnostic>,
}

impl IngestReport {
    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.records.iter().flat_map(|r| r.violations.iter())
    }

    pub fn error_count(&self) -> usize {
        self.violations().filter(|v| v.is_error()).count()
    }

    /// Incidents without Error-severity violations.
    pub fn clean_incidents(&self) -> Vec<Incident> {
        self.records.iter().filter(|r| !r.has_errors()).map(|r| r.incident.clone()).collect()
    }
}

/// Parse, decode and validate a whole stream. Records come back in line order.
pub fn ingest<R: Read>(
    stream: R,
    delimiter: u8,
    aliases: &HeaderAliases,
    tables: &CodebookTables,
) -> Result<IngestReport, IngestError> {
    let parsed = parse_delimited_with_aliases(stream, delimiter, aliases)?;
    let records = parsed
        .records
        .iter()
        .map(|raw| {
            let (incident, mut violations) = decode_record(raw, tables);
            let mut checks = validate_incident(&incident, tables);
            for v in &mut checks {
                v.line = Some(raw.line());
            }
            violations.append(&mut checks);
            CheckedIncident { line: raw.line(), incident, violations }
        })
        .collect();
    Ok(IngestReport { records, diagnostics: parsed.diagnostics })
}
