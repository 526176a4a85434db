//! Coded domains, sentinel conventions and historical country validity.

mod cell;
mod event_id;
mod tables;

pub use cell::{decode_coded_numeric, encode_coded_numeric, CodedCell, FieldKind, TriState};
pub use event_id::{format_event_id, parse_event_id, EventId};
pub use tables::{
    Code, CodebookTables, CountryValidity, Domain, Watershed, WatershedEvent,
};

/// Country code reserved for "location could not be identified".
pub const UNKNOWN_COUNTRY: Code = 0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodebookError {
    #[error("malformed event id: {0}")]
    EventId(String),
    #[error("unknown {domain} code {code}")]
    UnknownCode { domain: &'static str, code: i64 },
    #[error("country code {0} belongs to no region")]
    NoRegion(Code),
    #[error("{kind} cell {raw:?} is neither a number nor an unknown sentinel")]
    NotNumeric { kind: FieldKind, raw: String },
    #[error("code table {file}: {message}")]
    Table { file: String, message: String },
}
