use std::fmt;

use serde::{Deserialize, Serialize};

use super::CodebookError;

/// Decoded form of a numeric codebook cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CodedCell {
    Known(i64),
    #[default]
    Unknown,
}

impl CodedCell {
    pub fn known(self) -> Option<i64> {
        match self {
            CodedCell::Known(v) => Some(v),
            CodedCell::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        matches!(self, CodedCell::Known(_))
    }
}

impl From<Option<i64>> for CodedCell {
    fn from(value: Option<i64>) -> Self {
        value.map_or(CodedCell::Unknown, CodedCell::Known)
    }
}

/// Sentinel convention a numeric column follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Casualty, perpetrator, hostage and dollar figures: `-99`.
    Count,
    /// Yes/No flags coded 1/0 with `-9` for unknown. Flags only recorded
    /// after 1997 (doubtterr) use the same spelling for earlier incidents.
    TriState,
    /// Year, month and day: `0`.
    DatePart,
    /// Categorical codes: `-9`.
    Code,
}

impl FieldKind {
    pub fn sentinel(self) -> &'static str {
        match self {
            FieldKind::Count => "-99",
            FieldKind::TriState | FieldKind::Code => "-9",
            FieldKind::DatePart => "0",
        }
    }

    pub fn is_sentinel(self, raw: &str) -> bool {
        let raw = raw.trim();
        raw.eq_ignore_ascii_case("unknown") || raw == self.sentinel()
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FieldKind::Count => "count",
            FieldKind::TriState => "tri-state",
            FieldKind::DatePart => "date part",
            FieldKind::Code => "code",
        };
        f.write_str(name)
    }
}

pub fn decode_coded_numeric(kind: FieldKind, raw: &str) -> Result<CodedCell, CodebookError> {
    if kind.is_sentinel(raw) {
        return Ok(CodedCell::Unknown);
    }
    raw.trim()
        .parse::<i64>()
        .map(CodedCell::Known)
        .map_err(|_| CodebookError::NotNumeric { kind, raw: raw.to_string() })
}

/// Inverse of [`decode_coded_numeric`] for writing canonical files.
pub fn encode_coded_numeric(kind: FieldKind, cell: CodedCell) -> String {
    match cell {
        CodedCell::Known(v) => v.to_string(),
        CodedCell::Unknown => kind.sentinel().to_string(),
    }
}

/// Yes/No/Unknown flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    No,
    Yes,
    #[default]
    Unknown,
}

impl TriState {
    pub fn from_cell(cell: CodedCell) -> Option<Self> {
        match cell {
            CodedCell::Known(1) => Some(TriState::Yes),
            CodedCell::Known(0) => Some(TriState::No),
            CodedCell::Unknown => Some(TriState::Unknown),
            CodedCell::Known(_) => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            TriState::Yes => 1,
            TriState::No => 0,
            TriState::Unknown => -9,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TriState::Yes => "Yes",
            TriState::No => "No",
            TriState::Unknown => "Unknown",
        }
    }

    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }
}
