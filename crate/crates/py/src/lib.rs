//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists, built by round-tripping through JSON.

use std::path::PathBuf;
use std::sync::Arc;

use incube::codebook::{self, CodebookTables, CodedCell};
use incube::cube::{aggregate, write_delimited, CellQuery, Measure, Snapshot, SnapshotError};
use incube::ingest::{self, GeneratorProfile, HeaderAliases};
use incube::mining::{self, build_transactions, parse_item_dims, series_from_result, ItemDim, OutlierMethod};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(incube, IncubeError, PyException, "Base class for incube errors.");
create_exception!(incube, VersionMismatchError, IncubeError, "Snapshot format or codebook version differs.");

fn tables() -> &'static CodebookTables {
    CodebookTables::bundled()
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn snapshot_err(e: SnapshotError) -> PyErr {
    match e {
        SnapshotError::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.is_version_mismatch() => VersionMismatchError::new_err(e.to_string()),
        e => IncubeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Accept a dict or a JSON string.
fn query_from(spec: &Bound<'_, PyAny>) -> PyResult<CellQuery> {
    let text: String = match spec.extract::<String>() {
        Ok(s) => s,
        Err(_) => spec.py().import("json")?.call_method1("dumps", (spec,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(value_err)
}

fn item_dims(names: Option<Vec<String>>, default: &[ItemDim]) -> PyResult<Vec<ItemDim>> {
    match names {
        Some(names) => parse_item_dims(&names).map_err(value_err),
        None => Ok(default.to_vec()),
    }
}

fn delimiter_byte(delimiter: &str) -> PyResult<u8> {
    match delimiter.as_bytes() {
        [b] => Ok(*b),
        _ => Err(PyValueError::new_err("delimiter must be a single ASCII character")),
    }
}

/// `(year, month, day, sequence)` from a 12-digit event id.
#[pyfunction]
fn parse_event_id(text: &str) -> PyResult<(u16, u8, u8, u8)> {
    let id = codebook::parse_event_id(text).map_err(value_err)?;
    Ok((id.year(), id.month(), id.day(), id.sequence()))
}

#[pyfunction]
fn format_event_id(year: u16, month: u8, day: u8, sequence: u8) -> PyResult<String> {
    let id = codebook::EventId::new(year, month, day, sequence).map_err(value_err)?;
    Ok(codebook::format_event_id(&id))
}

/// Region name for a country name.
#[pyfunction]
fn region_of(country: &str) -> PyResult<String> {
    let t = tables();
    let code = t.country_by_name(country).ok_or_else(|| value_err(format!("unknown country {country:?}")))?;
    let region = t.region_of_country(code).map_err(value_err)?;
    Ok(t.region_name(region).unwrap_or_default().to_string())
}

#[pyfunction]
fn distribute_casualties(total: i64, n: usize) -> PyResult<Vec<i64>> {
    let cells = ingest::distribute_casualties(&vec![(); n], CodedCell::Known(total)).map_err(value_err)?;
    Ok(cells.into_iter().filter_map(CodedCell::known).collect())
}

#[pyfunction]
fn robust_z_scores(values: Vec<f64>) -> PyResult<Vec<f64>> {
    mining::robust_z_scores(&values).map_err(value_err)
}

/// Synthetic incidents as delimited text with a header row.
#[pyfunction]
#[pyo3(signature = (seed, n, delimiter = ","))]
fn generate_csv(seed: u64, n: usize, delimiter: &str) -> PyResult<String> {
    let incidents = ingest::generate_synthetic(seed, n, &GeneratorProfile::default(), tables()).map_err(value_err)?;
    let mut out = Vec::new();
    ingest::write_incidents(&mut out, &incidents, delimiter_byte(delimiter)?).map_err(value_err)?;
    String::from_utf8(out).map_err(value_err)
}

/// Violations found in a delimited file, one dict per violation.
#[pyfunction]
#[pyo3(signature = (path, delimiter = ","))]
fn validate_file<'py>(py: Python<'py>, path: PathBuf, delimiter: &str) -> PyResult<Bound<'py, PyAny>> {
    let file = std::fs::File::open(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
    let report = ingest::ingest(file, delimiter_byte(delimiter)?, &HeaderAliases::default(), tables()).map_err(value_err)?;
    let violations: Vec<_> = report.violations().collect();
    to_py(py, &violations)
}

/// A loaded cube snapshot.
#[pyclass(frozen, module = "incube")]
struct Cube {
    snapshot: Arc<Snapshot>,
}

#[pymethods]
impl Cube {
    /// Ingest a delimited file, drop records with Error-severity violations
    /// and build a cube from the rest.
    #[staticmethod]
    #[pyo3(signature = (path, delimiter = ","))]
    fn from_csv(py: Python<'_>, path: PathBuf, delimiter: &str) -> PyResult<Self> {
        let delimiter = delimiter_byte(delimiter)?;
        let file = std::fs::File::open(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        let snapshot = py.detach(|| {
            let report = ingest::ingest(file, delimiter, &HeaderAliases::default(), tables()).map_err(|e| e.to_string())?;
            Snapshot::build(report.clean_incidents(), tables()).map_err(|e| e.to_string())
        });
        Ok(Self { snapshot: Arc::new(snapshot.map_err(value_err)?) })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let snapshot = Snapshot::load(path, tables()).map_err(snapshot_err)?;
        Ok(Self { snapshot: Arc::new(snapshot) })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.snapshot.save(path).map_err(snapshot_err)
    }

    #[getter]
    fn rows(&self) -> usize {
        self.snapshot.table.rows()
    }

    fn __len__(&self) -> usize {
        self.rows()
    }

    fn __repr__(&self) -> String {
        format!("Cube(rows={}, codebook={:?})", self.rows(), self.snapshot.table.codebook_version())
    }

    fn schema<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.snapshot.table.schema())
    }

    /// Aggregate; `spec` is a dict or JSON string with group_by, filters and measures.
    fn query<'py>(&self, py: Python<'py>, spec: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let q = query_from(spec)?;
        let result = aggregate(&self.snapshot.table, &q).map_err(value_err)?;
        to_py(py, &result)
    }

    /// The same aggregate as a delimited grid.
    #[pyo3(signature = (spec, delimiter = ","))]
    fn query_csv(&self, spec: &Bound<'_, PyAny>, delimiter: &str) -> PyResult<String> {
        let q = query_from(spec)?;
        let result = aggregate(&self.snapshot.table, &q).map_err(value_err)?;
        let mut out = Vec::new();
        write_delimited(&mut out, &q, &result, delimiter_byte(delimiter)?).map_err(value_err)?;
        String::from_utf8(out).map_err(value_err)
    }

    #[pyo3(signature = (min_support, min_confidence, items = None))]
    fn rules<'py>(
        &self,
        py: Python<'py>,
        min_support: f64,
        min_confidence: f64,
        items: Option<Vec<String>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let items = item_dims(items, &ItemDim::DEFAULT)?;
        let snapshot = self.snapshot.clone();
        let mined = py.detach(move || {
            let txs = build_transactions(&snapshot.incidents, &items, tables());
            mining::mine(&txs, min_support, min_confidence)
        });
        to_py(py, &mined.map_err(value_err)?)
    }

    #[pyo3(signature = (min_support, key = None, items = None, max_items = None))]
    fn sequences<'py>(
        &self,
        py: Python<'py>,
        min_support: u64,
        key: Option<Vec<String>>,
        items: Option<Vec<String>>,
        max_items: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let key = item_dims(key, &[ItemDim::Gname])?;
        let items = item_dims(items, &[ItemDim::Attack])?;
        let snapshot = self.snapshot.clone();
        let mined = py.detach(move || {
            mining::mine_sequences(&snapshot.incidents, &key, &items, min_support, max_items, tables())
        });
        to_py(py, &mined.map_err(value_err)?)
    }

    /// Robust z-scores of one measure across the cells of a query.
    #[pyo3(signature = (spec, measure = "incident_count", threshold = 3.5))]
    fn outliers<'py>(
        &self,
        py: Python<'py>,
        spec: &Bound<'py, PyAny>,
        measure: &str,
        threshold: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let measure: Measure = measure.parse().map_err(value_err)?;
        let mut q = query_from(spec)?;
        if !q.measure_list().map_err(value_err)?.contains(&measure) {
            q.measures.push(measure.name().to_string());
        }
        let result = aggregate(&self.snapshot.table, &q).map_err(value_err)?;
        let series = series_from_result(&result, measure);
        let reports =
            mining::score_outliers(&series, measure.name(), threshold, OutlierMethod::RobustZ).map_err(value_err)?;
        to_py(py, &reports)
    }
}

#[pymodule]
#[pyo3(name = "incube")]
fn incube_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IncubeError", m.py().get_type::<IncubeError>())?;
    m.add("VersionMismatchError", m.py().get_type::<VersionMismatchError>())?;
    m.add("CODEBOOK_VERSION", tables().version())?;
    m.add_class::<Cube>()?;
    m.add_function(wrap_pyfunction!(parse_event_id, m)?)?;
    m.add_function(wrap_pyfunction!(format_event_id, m)?)?;
    m.add_function(wrap_pyfunction!(region_of, m)?)?;
    m.add_function(wrap_pyfunction!(distribute_casualties, m)?)?;
    m.add_function(wrap_pyfunction!(robust_z_scores, m)?)?;
    m.add_function(wrap_pyfunction!(generate_csv, m)?)?;
    m.add_function(wrap_pyfunction!(validate_file, m)?)?;
    Ok(())
}
