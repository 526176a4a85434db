//! Association rules, sequential patterns and outlier scores over incidents
//! and cube results.

mod apriori;
mod outliers;
mod sequences;
mod transactions;

pub use apriori::{frequent_itemsets, mine, mine_association_rules, AssociationRule, FrequentItemset, RuleMining};
pub use outliers::{robust_z_scores, score_outliers, series_from_result, OutlierMethod, OutlierReport, MAD_SCALE};
pub use sequences::{
    build_sequences, contains, mine_sequence_db, mine_sequences, Sequence, SequenceMining, SequentialPattern,
};
pub use transactions::{build_transactions, incident_items, parse_item_dims, ItemDim, Transaction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiningError {
    #[error("unknown item dimension {0:?}")]
    UnknownDim(String),
    #[error("bad threshold: {0}")]
    Threshold(String),
    #[error("series needs at least 3 values, got {0}")]
    SeriesTooShort(usize),
    #[error("series holds a non-finite value")]
    NonFinite,
}
