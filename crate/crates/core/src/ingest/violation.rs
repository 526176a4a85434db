use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable rule identifiers. `D*` rules come from decoding cells, `R*` rules
/// from cross-field validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// eventid is not a well-formed 12-digit identifier.
    D1,
    /// Cell is not a number and not an unknown sentinel for its field kind.
    D2,
    /// Code outside its codebook domain.
    D3,
    /// A required column is missing from the file.
    D4,
    /// resolution date present but the incident is not extended.
    R1,
    /// Weapon subtype does not belong to the weapon type in the same slot.
    R2,
    /// nhours must be under 24, and hours and days are mutually exclusive.
    R3,
    /// region disagrees with the region that contains the country.
    R4,
    /// Country did not exist (under that code) on the incident date.
    R5,
    /// propvalue falls outside the band named by propextent.
    R6,
    /// Multi-slot attack types must fill from slot 1 upward.
    R7,
    /// Hostage outcome or release count recorded for a non-hostage incident.
    R8,
    /// A finer date part is known while a coarser one is not.
    R9,
    /// Known year, month and day do not form a calendar date.
    R10,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::D1 => "D1",
            Rule::D2 => "D2",
            Rule::D3 => "D3",
            Rule::D4 => "D4",
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3 => "R3",
            Rule::R4 => "R4",
            Rule::R5 => "R5",
            Rule::R6 => "R6",
            Rule::R7 => "R7",
            Rule::R8 => "R8",
            Rule::R9 => "R9",
            Rule::R10 => "R10",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "Error",
            Severity::Warning => "Warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub severity: Severity,
    pub fields: Vec<String>,
    pub message: String,
    pub line: Option<u64>,
    pub eventid: String,
}

impl Violation {
    pub fn new(rule: Rule, severity: Severity, fields: &[&str], message: impl Into<String>) -> Self {
        Self {
            rule,
            severity,
            fields: fields.iter().map(|f| f.to_string()).collect(),
            message: message.into(),
            line: None,
            eventid: String::new(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

pub const REPORT_COLUMNS: [&str; 6] = ["rule", "severity", "line", "eventid", "fields", "message"];

/// Write the violation report: `rule,severity,line,eventid,fields,message`,
/// with multiple field names joined by `;`.
pub fn write_report<W: std::io::Write>(
    out: W,
    violations: &[Violation],
    delimiter: u8,
) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    writer.write_record(REPORT_COLUMNS)?;
    for v in violations {
        writer.write_record([
            v.rule.id().to_string(),
            v.severity.to_string(),
            v.line.map(|l| l.to_string()).unwrap_or_default(),
            v.eventid.clone(),
            v.fields.join(";"),
            v.message.clone(),
        ])?;
    }
    writer.flush()
}
