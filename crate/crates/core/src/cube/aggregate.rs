use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::facts::FactTable;
use super::query::CellQuery;
use super::QueryError;
use crate::dimensions::Member;

/// Sum over known cells, plus how many cells were known and unknown.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub sum: i64,
    pub known: u64,
    pub unknown: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    /// Member labels, one per grouped level, axes in query order.
    pub path: Vec<String>,
    pub values: BTreeMap<String, MeasureValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellResult {
    pub cells: Vec<Cell>,
    /// Facts passing the filters; equals the sum of incident counts.
    pub total: u64,
}

impl CellResult {
    pub fn cell(&self, path: &[&str]) -> Option<&Cell> {
        self.cells.iter().find(|c| c.path.iter().map(String::as_str).eq(path.iter().copied()))
    }
}

/// Hash group-by over the fact rows. Cells come back sorted by member
/// (codes numerically, then text, then Unknown), axis by axis.
pub fn aggregate(table: &FactTable, q: &CellQuery) -> Result<CellResult, QueryError> {
    let plan = q.plan(table)?;
    let key_columns: Vec<&[u32]> = plan
        .groups
        .iter()
        .flat_map(|&(dim, depth)| table.dims()[dim].levels[..depth].iter().map(|l| l.keys.as_slice()))
        .collect();
    let dictionaries: Vec<_> = plan
        .groups
        .iter()
        .flat_map(|&(dim, depth)| table.dims()[dim].levels[..depth].iter().map(|l| &l.dictionary))
        .collect();
    let columns: Vec<_> = plan
        .measures
        .iter()
        .map(|&m| table.measure(m).ok_or_else(|| QueryError::UnknownMeasure(m.name().to_string())))
        .collect::<Result<_, _>>()?;
    let filters: Vec<(&[u32], &[bool])> = plan
        .filters
        .iter()
        .map(|f| (table.dims()[f.dim].levels[f.level].keys.as_slice(), f.allowed.as_slice()))
        .collect();

    let mut groups: HashMap<Vec<u32>, Vec<MeasureValue>> = HashMap::new();
    let mut total = 0u64;
    let mut key = Vec::with_capacity(key_columns.len());
    for row in 0..table.rows() {
        if !filters.iter().all(|(keys, allowed)| allowed[keys[row] as usize]) {
            continue;
        }
        total += 1;
        key.clear();
        key.extend(key_columns.iter().map(|c| c[row]));
        let acc = match groups.get_mut(&key) {
            Some(acc) => acc,
            None => groups.entry(key.clone()).or_insert_with(|| vec![MeasureValue::default(); columns.len()]),
        };
        for (value, col) in acc.iter_mut().zip(&columns) {
            match col.cell(row).known() {
                Some(v) => {
                    value.sum = value.sum.checked_add(v).ok_or(QueryError::Overflow(col.measure.name()))?;
                    value.known += 1;
                }
                None => value.unknown += 1,
            }
        }
    }

    let mut keyed: Vec<(Vec<&Member>, Vec<u32>, Vec<MeasureValue>)> = groups
        .into_iter()
        .map(|(key, acc)| {
            let members = key.iter().zip(&dictionaries).map(|(&id, d)| d.member(id)).collect();
            (members, key, acc)
        })
        .collect();
    keyed.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let cells = keyed
        .into_iter()
        .map(|(_, key, acc)| Cell {
            path: key.iter().zip(&dictionaries).map(|(&id, d)| d.label(id).to_string()).collect(),
            values: plan.measures.iter().map(|m| m.name().to_string()).zip(acc).collect(),
        })
        .collect();
    Ok(CellResult { cells, total })
}

/// Delimited grid: axis columns, then `m`, `m_known`, `m_unknown` per measure.
pub fn write_delimited<W: Write>(
    out: W,
    q: &CellQuery,
    result: &CellResult,
    delimiter: u8,
) -> Result<(), QueryError> {
    let measures = q.measure_list()?;
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    let mut header = q.axis_names()?;
    for m in &measures {
        header.extend([m.name().to_string(), format!("{m}_known"), format!("{m}_unknown")]);
    }
    w.write_record(&header)?;
    for cell in &result.cells {
        let mut row = cell.path.clone();
        for m in &measures {
            let v = cell.values.get(m.name()).copied().unwrap_or_default();
            row.extend([v.sum.to_string(), v.known.to_string(), v.unknown.to_string()]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
