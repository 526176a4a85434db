//! Star-schema OLAP cubes over incident-event codebook files, with
//! association-rule, sequential-pattern and outlier mining on top.
//!
//! The pipeline is: [`ingest`] delimited files into typed [`ingest::Incident`]
//! records, map them onto [`dimensions`] hierarchies, build a columnar
//! [`cube::FactTable`], then query it or hand incidents to [`mining`].

pub mod codebook;
pub mod cube;
pub mod dimensions;
pub mod ingest;
pub mod mining;

pub use codebook::{CodebookTables, CodedCell, EventId, TriState};
pub use cube::{CellQuery, CellResult, FactTable};
pub use ingest::Incident;
