#![allow(dead_code)]

pub mod oracle;

use incube::cube::CellResult;
use oracle::{OracleCells, Triple};

/// A library result in oracle form.
pub fn result_cells(result: &CellResult) -> OracleCells {
    result
        .cells
        .iter()
        .map(|c| {
            let values = c.values.iter().map(|(m, v)| (m.clone(), (v.sum, v.known, v.unknown) as Triple)).collect();
            (c.path.clone(), values)
        })
        .collect()
}
