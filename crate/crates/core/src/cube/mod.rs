//! Columnar fact store, sentinel-aware aggregation and the OLAP algebra.

mod aggregate;
mod facts;
mod measures;
mod query;
mod snapshot;

pub use aggregate::{aggregate, write_delimited, Cell, CellResult, MeasureValue};
pub use facts::{
    build_facts, DimColumns, Dictionary, FactTable, HierarchySchema, LevelColumn, LevelSchema,
    MeasureColumn, MeasureSchema, Schema, UnknownMask,
};
pub use measures::{Aggregator, Measure};
pub use query::{dice, drilldown, pivot, rollup, slice, CellQuery, Filter, GroupBy, LevelRef};
pub use snapshot::{snapshot_load, snapshot_save, Snapshot, SnapshotError, FORMAT_VERSION, MAGIC};

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("unknown dimension or level {0:?}")]
    UnknownDimension(String),
    #[error("unknown measure {0:?}")]
    UnknownMeasure(String),
    #[error("depth {depth} out of range for {hierarchy} (1..={max})")]
    DepthOutOfRange { hierarchy: String, depth: usize, max: usize },
    #[error("no member {member:?} at {dim}")]
    UnknownMember { dim: String, member: String },
    #[error("filter on {0} has no members")]
    EmptyMemberSet(String),
    #[error("{0} is not a tri-state dimension")]
    NotTriState(String),
    #[error("bad tri-state value {0:?}")]
    BadTriState(String),
    #[error("{0} appears twice")]
    Duplicate(String),
    #[error("{0} is not in the group-by")]
    NotGrouped(String),
    #[error("cannot roll up {0} past its top level")]
    RollupPastRoot(String),
    #[error("cannot drill down {0} past its leaf level")]
    DrilldownPastLeaf(String),
    #[error("sum of {0} overflows")]
    Overflow(&'static str),
    #[error("write failed: {0}")]
    Write(#[from] csv::Error),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::dimensions::DimensionError> for QueryError {
    fn from(e: crate::dimensions::DimensionError) -> Self {
        match e {
            crate::dimensions::DimensionError::UnknownDimension(name) => QueryError::UnknownDimension(name),
            other => QueryError::UnknownDimension(other.to_string()),
        }
    }
}
