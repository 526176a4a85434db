//! Request bodies for the query and mining endpoints, and how each one is
//! answered from a snapshot.

use incube::codebook::CodebookTables;
use incube::cube::{aggregate, CellQuery, CellResult, Measure, QueryError, Snapshot};
use incube::mining::{
    self, build_transactions, parse_item_dims, series_from_result, ItemDim, MiningError, OutlierMethod,
    OutlierReport, RuleMining, SequenceMining,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 3.5;

#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResponse {
    /// The query as executed.
    pub query: CellQuery,
    #[serde(flatten)]
    pub result: CellResult,
}

pub fn answer_query(snapshot: &Snapshot, q: &CellQuery) -> Result<QueryResponse, RequestError> {
    let result = aggregate(&snapshot.table, q)?;
    Ok(QueryResponse { query: q.effective()?, result })
}

fn dims(names: &Option<Vec<String>>, default: &[ItemDim]) -> Result<Vec<ItemDim>, MiningError> {
    match names {
        Some(names) => parse_item_dims(names),
        None => Ok(default.to_vec()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesRequest {
    pub min_support: f64,
    pub min_confidence: f64,
    /// Item dimensions; defaults to attack, weapon, targtype, region, suicide.
    #[serde(default)]
    pub items: Option<Vec<String>>,
    #[serde(default, rename = "async")]
    pub run_async: bool,
}

impl RulesRequest {
    pub fn answer(&self, snapshot: &Snapshot, tables: &CodebookTables) -> Result<RuleMining, RequestError> {
        let items = dims(&self.items, &ItemDim::DEFAULT)?;
        let txs = build_transactions(&snapshot.incidents, &items, tables);
        Ok(mining::mine(&txs, self.min_support, self.min_confidence)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequencesRequest {
    /// Minimum number of entities containing a pattern.
    pub min_support: u64,
    /// Entity key dimensions; defaults to gname.
    #[serde(default)]
    pub key: Option<Vec<String>>,
    /// Item dimensions per incident; defaults to attack.
    #[serde(default)]
    pub items: Option<Vec<String>>,
    /// Cap on items per pattern; unbounded when absent.
    #[serde(default)]
    pub max_items: Option<usize>,
    #[serde(default, rename = "async")]
    pub run_async: bool,
}

impl SequencesRequest {
    pub fn answer(&self, snapshot: &Snapshot, tables: &CodebookTables) -> Result<SequenceMining, RequestError> {
        let key = dims(&self.key, &[ItemDim::Gname])?;
        let items = dims(&self.items, &[ItemDim::Attack])?;
        Ok(mining::mine_sequences(&snapshot.incidents, &key, &items, self.min_support, self.max_items, tables)?)
    }
}

/// Score either an explicit series or the cells of a query result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutliersRequest {
    #[serde(default)]
    pub series: Option<Vec<f64>>,
    #[serde(default)]
    pub query: Option<CellQuery>,
    /// Measure read from the query cells; defaults to incident_count.
    #[serde(default)]
    pub measure: Option<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub method: OutlierMethod,
}

fn default_threshold() -> f64 {
    DEFAULT_OUTLIER_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutliersResponse {
    pub reports: Vec<OutlierReport>,
}

impl OutliersRequest {
    pub fn answer(&self, snapshot: &Snapshot) -> Result<OutliersResponse, RequestError> {
        let (series, measure) = match (&self.series, &self.query) {
            (Some(values), None) => {
                let labelled = values.iter().enumerate().map(|(i, &v)| (vec![i.to_string()], v)).collect();
                (labelled, self.measure.clone().unwrap_or_else(|| "value".into()))
            }
            (None, Some(q)) => {
                let measure: Measure = self.measure.as_deref().unwrap_or("incident_count").parse()?;
                let mut q = q.clone();
                if !q.measure_list()?.contains(&measure) {
                    q.measures.push(measure.name().to_string());
                }
                let result = aggregate(&snapshot.table, &q)?;
                (series_from_result(&result, measure), measure.name().to_string())
            }
            _ => return Err(RequestError::Invalid("give exactly one of series or query".into())),
        };
        let reports = mining::score_outliers(&series, &measure, self.threshold, self.method)?;
        Ok(OutliersResponse { reports })
    }
}
