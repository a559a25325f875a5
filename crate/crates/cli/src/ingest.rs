//! CSV dataset loading.
//!
//! Expects a header row, ISO-8601 timestamps and plain decimal values. Rows
//! may come in any order; they are sorted by timestamp before validation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{Datelike, TimeZone, Timelike, Utc};
use covacast_core::covariates::{CovariateEntry, CovariateSeries, CovariateValue};
use covacast_core::series::{SeriesError, TimePoint, Timestamp};
use covacast_core::{CovariateRef, Frequency, TimeSeries};
use thiserror::Error;

use crate::config::{parse_timestamp, Aggregation, DatasetConfig};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("data row {row}: unparseable timestamp `{text}`")]
    UnparseableTimestamp { row: usize, text: String },
    #[error("data row {row}: non-numeric value `{text}`")]
    NonNumericValue { row: usize, text: String },
    #[error("frequency gap after {after}: next timestamp is {found}")]
    FrequencyGap { after: Timestamp, found: Timestamp },
    #[error(transparent)]
    Series(SeriesError),
}

impl From<SeriesError> for IngestError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::FrequencyGap { after, found } => IngestError::FrequencyGap { after, found },
            other => IngestError::Series(other),
        }
    }
}

/// Target series plus the verbatim extra columns, aligned point by point.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub series: TimeSeries,
    pub columns: BTreeMap<String, Vec<String>>,
}

impl LoadedDataset {
    /// Extra columns as categorical covariate series.
    pub fn covariate_series(&self) -> Vec<CovariateSeries> {
        self.columns
            .iter()
            .map(|(name, values)| CovariateSeries {
                source: CovariateRef::Column(name.clone()),
                entries: self
                    .series
                    .points()
                    .iter()
                    .zip(values)
                    .map(|(p, v)| CovariateEntry {
                        timestamp: p.timestamp,
                        value: CovariateValue::Known(v.clone()),
                    })
                    .collect(),
            })
            .collect()
    }
}

struct Row {
    timestamp: Timestamp,
    value: f64,
    extras: Vec<String>,
}

fn midnight(ts: Timestamp) -> Timestamp {
    Utc.with_ymd_and_hms(ts.year(), ts.month(), ts.day(), 0, 0, 0)
        .single()
        .expect("valid date")
}

pub fn load_dataset(config: &DatasetConfig) -> Result<LoadedDataset, IngestError> {
    let file = std::fs::File::open(&config.path).map_err(|source| IngestError::Io {
        path: config.path.clone(),
        source,
    })?;
    load_from_reader(config, file)
}

pub fn load_from_reader(
    config: &DatasetConfig,
    reader: impl std::io::Read,
) -> Result<LoadedDataset, IngestError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let ts_col = find(&config.timestamp_column)?;
    let value_col = find(&config.value_column)?;
    let extra_cols = config
        .extra_covariate_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let ts_text = field(ts_col);
        let timestamp = parse_timestamp(ts_text).ok_or_else(|| IngestError::UnparseableTimestamp {
            row,
            text: ts_text.to_string(),
        })?;
        let value_text = field(value_col);
        let value = value_text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| IngestError::NonNumericValue {
                row,
                text: value_text.to_string(),
            })?;
        rows.push(Row {
            timestamp,
            value,
            extras: extra_cols.iter().map(|&c| field(c).to_string()).collect(),
        });
    }
    rows.sort_by_key(|r| r.timestamp);

    if config.aggregate == Aggregation::DailySum {
        rows = daily_sum(rows);
    }
    if config.frequency != Frequency::HalfHourly {
        for r in &mut rows {
            if r.timestamp.num_seconds_from_midnight() != 0 {
                r.timestamp = midnight(r.timestamp);
            }
        }
    }

    let points = rows.iter().map(|r| TimePoint::new(r.timestamp, r.value)).collect();
    let series = TimeSeries::new(points, config.frequency)?;
    let columns = config
        .extra_covariate_columns
        .iter()
        .enumerate()
        .map(|(k, name)| (name.clone(), rows.iter().map(|r| r.extras[k].clone()).collect()))
        .collect();
    Ok(LoadedDataset { series, columns })
}

/// Sums each calendar day; extra columns keep the day's first value.
fn daily_sum(rows: Vec<Row>) -> Vec<Row> {
    let mut out: Vec<Row> = Vec::new();
    for r in rows {
        let day = midnight(r.timestamp);
        match out.last_mut() {
            Some(last) if last.timestamp == day => last.value += r.value,
            _ => out.push(Row {
                timestamp: day,
                ..r
            }),
        }
    }
    out
}
