use serde::{Deserialize, Serialize};

use super::MiningError;
use crate::cube::{CellResult, Measure};

/// Consistency constant making the MAD comparable to a normal stddev.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMethod {
    #[default]
    RobustZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub path: Vec<String>,
    pub measure: String,
    pub value: f64,
    pub score: f64,
    pub flagged: bool,
    pub method: OutlierMethod,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Robust z-scores `(x - median) / (1.4826 * MAD)`. With a zero MAD the
/// population z-score is used instead; with zero spread every score is 0.
///
/// Everything is computed from deviations about the median, so adding a
/// constant to the series leaves the scores unchanged.
pub fn robust_z_scores(series: &[f64]) -> Result<Vec<f64>, MiningError> {
    if series.len() < 3 {
        return Err(MiningError::SeriesTooShort(series.len()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(MiningError::NonFinite);
    }
    let center = median(&sorted(series.iter().copied()));
    let dev: Vec<f64> = series.iter().map(|x| x - center).collect();
    let mad = median(&sorted(dev.iter().map(|d| d.abs())));
    if mad > 0.0 {
        return Ok(dev.iter().map(|d| d / (MAD_SCALE * mad)).collect());
    }
    let n = dev.len() as f64;
    let mean = dev.iter().sum::<f64>() / n;
    let sd = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Ok(vec![0.0; dev.len()]);
    }
    Ok(dev.iter().map(|d| (d - mean) / sd).collect())
}

fn check_threshold(threshold: f64) -> Result<(), MiningError> {
    if threshold.is_finite() && threshold > 0.0 {
        Ok(())
    } else {
        Err(MiningError::Threshold(format!("threshold must be positive, got {threshold}")))
    }
}

/// Score a labelled series; a point is flagged when `|score| > threshold`.
pub fn score_outliers(
    series: &[(Vec<String>, f64)],
    measure: &str,
    threshold: f64,
    method: OutlierMethod,
) -> Result<Vec<OutlierReport>, MiningError> {
    check_threshold(threshold)?;
    let values: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
    let scores = match method {
        OutlierMethod::RobustZ => robust_z_scores(&values)?,
    };
    Ok(series
        .iter()
        .zip(scores)
        .map(|((path, value), score)| OutlierReport {
            path: path.clone(),
            measure: measure.to_string(),
            value: *value,
            score,
            flagged: score.abs() > threshold,
            method,
        })
        .collect())
}

/// The known-value sums of `measure` across the cells of a query result,
/// in cell order.
pub fn series_from_result(result: &CellResult, measure: Measure) -> Vec<(Vec<String>, f64)> {
    result
        .cells
        .iter()
        .filter_map(|c| c.values.get(measure.name()).map(|v| (c.path.clone(), v.sum as f64)))
        .collect()
}
