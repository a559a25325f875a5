//! Time-series data model, validation/test splitting and rolling-origin
//! task generation.

use chrono::{DateTime, Datelike, Duration, Months, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covariates::CovariateValue;

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series is empty")]
    Empty,
    #[error("non-finite value at {0}")]
    NonFiniteValue(Timestamp),
    #[error("timestamps not strictly increasing at {0}")]
    NotIncreasing(Timestamp),
    #[error("frequency gap after {after}: next point is {found}")]
    FrequencyGap { after: Timestamp, found: Timestamp },
    #[error("{which} range [{start}, {end}] is invalid (start after end)")]
    InvalidRange {
        which: &'static str,
        start: Timestamp,
        end: Timestamp,
    },
    #[error("{which} range lies outside the series or contains no points")]
    RangeOutOfBounds { which: &'static str },
    #[error("validation and test ranges overlap")]
    OverlappingRanges,
    #[error("validation range must precede the test range")]
    ValidationAfterTest,
    #[error("points between the validation and test ranges would be dropped")]
    NonContiguousRanges,
    #[error("horizon {horizon} exceeds the {available} points of the evaluation range")]
    HorizonTooLarge { horizon: usize, available: usize },
    #[error("horizon and stride must be positive")]
    ZeroStep,
    #[error("evaluation range starts at the first point, leaving no history")]
    EmptyHistory,
}

/// Declared sampling cadence of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    #[serde(alias = "30min", alias = "30-minute")]
    HalfHourly,
    Daily,
    Weekly,
    Monthly,
}

impl Frequency {
    /// Timestamp `steps` periods after `ts`.
    pub fn advance(self, ts: Timestamp, steps: u32) -> Timestamp {
        match self {
            Frequency::HalfHourly => ts + Duration::minutes(30 * i64::from(steps)),
            Frequency::Daily => ts + Duration::days(i64::from(steps)),
            Frequency::Weekly => ts + Duration::weeks(i64::from(steps)),
            Frequency::Monthly => ts
                .checked_add_months(Months::new(steps))
                .expect("timestamp overflow"),
        }
    }

    /// True when `next` is exactly one period after `prev`. Monthly data only
    /// needs consecutive calendar months.
    pub fn is_next(self, prev: Timestamp, next: Timestamp) -> bool {
        match self {
            Frequency::Monthly => {
                let idx = |t: Timestamp| i64::from(t.year()) * 12 + i64::from(t.month0());
                idx(next) - idx(prev) == 1
            }
            _ => self.advance(prev, 1) == next,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub timestamp: Timestamp,
    pub value: f64,
}

impl TimePoint {
    pub fn new(timestamp: Timestamp, value: f64) -> Self {
        Self { timestamp, value }
    }
}

/// An ordered, gap-free univariate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    points: Vec<TimePoint>,
    frequency: Frequency,
}

impl TimeSeries {
    pub fn new(points: Vec<TimePoint>, frequency: Frequency) -> Result<Self, SeriesError> {
        if points.is_empty() {
            return Err(SeriesError::Empty);
        }
        for p in &points {
            if !p.value.is_finite() {
                return Err(SeriesError::NonFiniteValue(p.timestamp));
            }
        }
        for w in points.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(SeriesError::NotIncreasing(w[1].timestamp));
            }
            if !frequency.is_next(w[0].timestamp, w[1].timestamp) {
                return Err(SeriesError::FrequencyGap {
                    after: w[0].timestamp,
                    found: w[1].timestamp,
                });
            }
        }
        Ok(Self { points, frequency })
    }

    /// Builds a series of `values` starting at `start`, one period apart.
    pub fn from_values(
        start: Timestamp,
        frequency: Frequency,
        values: &[f64],
    ) -> Result<Self, SeriesError> {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| TimePoint::new(frequency.advance(start, i as u32), v))
            .collect();
        Self::new(points, frequency)
    }

    pub fn points(&self) -> &[TimePoint] {
        &self.points
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.points.iter().map(|p| p.timestamp).collect()
    }

    pub fn first(&self) -> &TimePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TimePoint {
        &self.points[self.points.len() - 1]
    }

    /// Contiguous sub-series `[start, end)` by index. Returns `None` when the
    /// slice would be empty.
    pub fn slice(&self, start: usize, end: usize) -> Option<TimeSeries> {
        if start >= end || end > self.points.len() {
            return None;
        }
        Some(TimeSeries {
            points: self.points[start..end].to_vec(),
            frequency: self.frequency,
        })
    }

    /// Index range of the points inside `range`, or `None` if there are none.
    fn index_range(&self, range: &DateRange) -> Option<(usize, usize)> {
        let start = self.points.partition_point(|p| p.timestamp < range.start);
        let end = self.points.partition_point(|p| p.timestamp <= range.end);
        (start < end).then_some((start, end))
    }
}

/// Inclusive timestamp range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl DateRange {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Self { start, end }
    }

    fn intersects(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    fn check(&self, which: &'static str) -> Result<(), SeriesError> {
        if self.start > self.end {
            return Err(SeriesError::InvalidRange {
                which,
                start: self.start,
                end: self.end,
            });
        }
        Ok(())
    }

    fn locate(
        &self,
        series: &TimeSeries,
        which: &'static str,
    ) -> Result<(usize, usize), SeriesError> {
        if self.start < series.first().timestamp || self.end > series.last().timestamp {
            return Err(SeriesError::RangeOutOfBounds { which });
        }
        series
            .index_range(self)
            .ok_or(SeriesError::RangeOutOfBounds { which })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub validation: DateRange,
    pub test: DateRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    /// Points before the validation range; `None` when validation starts at
    /// the first point.
    pub training_prefix: Option<TimeSeries>,
    pub validation: TimeSeries,
    pub test: TimeSeries,
}

/// Partitions the series into training prefix, validation and test parts.
/// Points after the test range are not part of any split.
pub fn split_series(series: &TimeSeries, spec: &SplitSpec) -> Result<Splits, SeriesError> {
    spec.validation.check("validation")?;
    spec.test.check("test")?;
    if spec.validation.intersects(&spec.test) {
        return Err(SeriesError::OverlappingRanges);
    }
    if spec.validation.start > spec.test.start {
        return Err(SeriesError::ValidationAfterTest);
    }
    let (v0, v1) = spec.validation.locate(series, "validation")?;
    let (t0, t1) = spec.test.locate(series, "test")?;
    if t0 != v1 {
        return Err(SeriesError::NonContiguousRanges);
    }
    Ok(Splits {
        training_prefix: series.slice(0, v0),
        validation: series.slice(v0, v1).expect("nonempty validation"),
        test: series.slice(t0, t1).expect("nonempty test"),
    })
}

/// One rolling-origin forecasting instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTask {
    pub history: TimeSeries,
    pub origin: Timestamp,
    pub horizon: usize,
    pub truth: Vec<f64>,
    pub truth_timestamps: Vec<Timestamp>,
    /// Empty until covariates are attached.
    pub future_covariates: Vec<CovariateValue>,
}

impl ForecastTask {
    /// Keeps only the most recent `cap` history points.
    pub fn with_max_history(mut self, cap: usize) -> Self {
        let n = self.history.len();
        if cap > 0 && n > cap {
            self.history = self.history.slice(n - cap, n).expect("cap > 0");
        }
        self
    }

    /// History timestamps followed by the horizon timestamps.
    pub fn all_timestamps(&self) -> Vec<Timestamp> {
        let mut ts = self.history.timestamps();
        ts.extend_from_slice(&self.truth_timestamps);
        ts
    }
}

/// Generates forecast tasks whose origins start at `eval_range.start` and
/// advance by `stride` points. Each task sees every point before its origin.
/// Tail points that cannot fill a whole horizon are left uncovered.
pub fn rolling_origins(
    series: &TimeSeries,
    eval_range: &DateRange,
    horizon: usize,
    stride: usize,
) -> Result<Vec<ForecastTask>, SeriesError> {
    if horizon == 0 || stride == 0 {
        return Err(SeriesError::ZeroStep);
    }
    eval_range.check("evaluation")?;
    let (start, end) = eval_range.locate(series, "evaluation")?;
    let available = end - start;
    if horizon > available {
        return Err(SeriesError::HorizonTooLarge { horizon, available });
    }
    if start == 0 {
        return Err(SeriesError::EmptyHistory);
    }
    let points = series.points();
    let mut tasks = Vec::new();
    let mut origin = start;
    while origin + horizon <= end {
        let truth_points = &points[origin..origin + horizon];
        tasks.push(ForecastTask {
            history: series.slice(0, origin).expect("origin > 0"),
            origin: points[origin].timestamp,
            horizon,
            truth: truth_points.iter().map(|p| p.value).collect(),
            truth_timestamps: truth_points.iter().map(|p| p.timestamp).collect(),
            future_covariates: Vec::new(),
        });
        origin += stride;
    }
    let uncovered = uncovered_tail(available, horizon, stride);
    if uncovered > 0 {
        log::warn!(
            "{uncovered} trailing point(s) of the evaluation range are not covered by any task \
             (horizon {horizon}, stride {stride})"
        );
    }
    Ok(tasks)
}

/// Number of points at the end of a range of `len` points that no task's
/// truth reaches.
pub fn uncovered_tail(len: usize, horizon: usize, stride: usize) -> usize {
    if horizon == 0 || stride == 0 || horizon > len {
        return len;
    }
    let n_tasks = (len - horizon) / stride + 1;
    let last_end = (n_tasks - 1) * stride + horizon;
    len - last_end
}
