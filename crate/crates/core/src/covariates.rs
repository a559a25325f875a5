//! Calendar covariates and random covariate censoring.

use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::Timestamp;

/// Placeholder shown in prompts for a censored covariate entry.
pub const CENSORED_TOKEN: &str = "unknown";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovariateError {
    #[error("censoring ratio {0} is outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("unknown covariate kind `{0}`")]
    UnknownKind(String),
}

/// Calendar attribute derived from a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    Year,
    Month,
    Date,
    DayOfWeek,
    YearWeek,
}

impl CovariateKind {
    pub const ALL: [CovariateKind; 5] = [
        CovariateKind::Year,
        CovariateKind::Month,
        CovariateKind::Date,
        CovariateKind::DayOfWeek,
        CovariateKind::YearWeek,
    ];

    /// Config-file name.
    pub fn name(self) -> &'static str {
        match self {
            CovariateKind::Year => "year",
            CovariateKind::Month => "month",
            CovariateKind::Date => "date",
            CovariateKind::DayOfWeek => "day_of_week",
            CovariateKind::YearWeek => "year_week",
        }
    }

    /// Human-readable label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            CovariateKind::Year => "Year",
            CovariateKind::Month => "Month",
            CovariateKind::Date => "Date",
            CovariateKind::DayOfWeek => "Day of Week",
            CovariateKind::YearWeek => "Year-Week",
        }
    }

    /// Renders the calendar component of `ts`.
    pub fn render(self, ts: Timestamp) -> String {
        match self {
            CovariateKind::Year => ts.year().to_string(),
            CovariateKind::Month => ts.format("%B").to_string(),
            CovariateKind::Date => ts.format("%Y-%m-%d").to_string(),
            CovariateKind::DayOfWeek => ts.format("%A").to_string(),
            CovariateKind::YearWeek => {
                let week = ts.iso_week();
                format!("{}-W{:02}", week.year(), week.week())
            }
        }
    }
}

impl fmt::Display for CovariateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CovariateKind {
    type Err = CovariateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CovariateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CovariateError::UnknownKind(s.to_string()))
    }
}

/// Where a covariate comes from: a derived calendar attribute or a verbatim
/// data column.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CovariateRef {
    Calendar(CovariateKind),
    Column(String),
}

impl CovariateRef {
    /// Config-file name: the kind name, or `column:<name>`.
    pub fn name(&self) -> String {
        match self {
            CovariateRef::Calendar(k) => k.name().to_string(),
            CovariateRef::Column(c) => format!("column:{c}"),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CovariateRef::Calendar(k) => k.label().to_string(),
            CovariateRef::Column(c) => c.clone(),
        }
    }
}

impl FromStr for CovariateRef {
    type Err = CovariateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("column:") {
            Some(col) if !col.is_empty() => Ok(CovariateRef::Column(col.to_string())),
            Some(_) => Err(CovariateError::UnknownKind(s.to_string())),
            None => s.parse().map(CovariateRef::Calendar),
        }
    }
}

impl TryFrom<String> for CovariateRef {
    type Error = CovariateError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CovariateRef> for String {
    fn from(c: CovariateRef) -> String {
        c.name()
    }
}

impl fmt::Display for CovariateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateValue {
    Known(String),
    Censored,
}

impl CovariateValue {
    pub fn as_prompt_text(&self) -> &str {
        match self {
            CovariateValue::Known(s) => s,
            CovariateValue::Censored => CENSORED_TOKEN,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, CovariateValue::Censored)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateEntry {
    pub timestamp: Timestamp,
    pub value: CovariateValue,
}

/// Covariate values aligned with a run of timestamps (history then horizon).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSeries {
    pub source: CovariateRef,
    pub entries: Vec<CovariateEntry>,
}

impl CovariateSeries {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn censored_count(&self) -> usize {
        self.entries.iter().filter(|e| e.value.is_censored()).count()
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.entries.iter().map(|e| e.timestamp).collect()
    }
}

/// Renders `kind` for every timestamp. Timestamps are expected to be
/// strictly increasing.
pub fn derive_covariate(timestamps: &[Timestamp], kind: CovariateKind) -> CovariateSeries {
    debug_assert!(timestamps.windows(2).all(|w| w[0] < w[1]));
    CovariateSeries {
        source: CovariateRef::Calendar(kind),
        entries: timestamps
            .iter()
            .map(|&ts| CovariateEntry {
                timestamp: ts,
                value: CovariateValue::Known(kind.render(ts)),
            })
            .collect(),
    }
}

/// Which part of a task's covariates may be censored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorScope {
    HistoryOnly,
    HorizonOnly,
    #[default]
    Both,
}

/// Replaces exactly `round(ratio * n)` entries, drawn uniformly without
/// replacement, with the censored marker.
pub fn censor_covariates(
    cov: &CovariateSeries,
    ratio: f64,
    seed: u64,
) -> Result<CovariateSeries, CovariateError> {
    censor_covariates_scoped(cov, ratio, seed, CensorScope::Both, 0)
}

/// Like [`censor_covariates`], but only entries in `scope` are eligible. The
/// last `horizon` entries form the horizon part; `n` counts eligible entries.
pub fn censor_covariates_scoped(
    cov: &CovariateSeries,
    ratio: f64,
    seed: u64,
    scope: CensorScope,
    horizon: usize,
) -> Result<CovariateSeries, CovariateError> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(CovariateError::RatioOutOfRange(ratio));
    }
    let n = cov.len();
    let split = n.saturating_sub(horizon);
    let eligible: Vec<usize> = match scope {
        CensorScope::Both => (0..n).collect(),
        CensorScope::HistoryOnly => (0..split).collect(),
        CensorScope::HorizonOnly => (split..n).collect(),
    };
    let count = (ratio * eligible.len() as f64).round() as usize;
    let mut out = cov.clone();
    if count == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pick in rand::seq::index::sample(&mut rng, eligible.len(), count) {
        out.entries[eligible[pick]].value = CovariateValue::Censored;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn day(y: i32, m: u32, d: u32) -> Timestamp {
        Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
    }

    fn render(ts: Timestamp, kind: CovariateKind) -> String {
        derive_covariate(&[ts], kind).entries[0].value.as_prompt_text().to_string()
    }

    #[test]
    fn renders_each_kind() {
        let ts = day(2024, 1, 15);
        assert_eq!(render(ts, CovariateKind::Year), "2024");
        assert_eq!(render(ts, CovariateKind::Month), "January");
        assert_eq!(render(ts, CovariateKind::Date), "2024-01-15");
        assert_eq!(render(ts, CovariateKind::DayOfWeek), "Monday");
        assert_eq!(render(ts, CovariateKind::YearWeek), "2024-W03");
    }

    #[test]
    fn iso_week_edges() {
        assert_eq!(render(day(2024, 1, 1), CovariateKind::YearWeek), "2024-W01");
        assert_eq!(render(day(2024, 1, 1), CovariateKind::DayOfWeek), "Monday");
        // 2021-01-03 is a Sunday that still belongs to ISO week 53 of 2020.
        assert_eq!(render(day(2021, 1, 3), CovariateKind::YearWeek), "2020-W53");
        // 2024-12-30 belongs to ISO week 1 of 2025.
        assert_eq!(render(day(2024, 12, 30), CovariateKind::YearWeek), "2025-W01");
    }

    #[test]
    fn kind_names_round_trip() {
        for k in CovariateKind::ALL {
            assert_eq!(k.name().parse::<CovariateKind>().unwrap(), k);
        }
        assert!("weekday".parse::<CovariateKind>().is_err());
        assert_eq!(
            "column:weather".parse::<CovariateRef>().unwrap(),
            CovariateRef::Column("weather".into())
        );
    }

    fn ten_days() -> CovariateSeries {
        let ts: Vec<_> = (1..=10).map(|d| day(2024, 3, d)).collect();
        derive_covariate(&ts, CovariateKind::Date)
    }

    #[test]
    fn zero_ratio_is_identity() {
        let cov = ten_days();
        assert_eq!(censor_covariates(&cov, 0.0, 7).unwrap(), cov);
    }

    #[test]
    fn full_ratio_censors_everything() {
        let cov = censor_covariates(&ten_days(), 1.0, 7).unwrap();
        assert_eq!(cov.censored_count(), 10);
    }

    #[test]
    fn exact_count_and_reproducible() {
        let cov = ten_days();
        let a = censor_covariates(&cov, 0.3, 42).unwrap();
        let b = censor_covariates(&cov, 0.3, 42).unwrap();
        assert_eq!(a.censored_count(), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn ratio_out_of_range() {
        assert_eq!(
            censor_covariates(&ten_days(), 1.5, 0).unwrap_err(),
            CovariateError::RatioOutOfRange(1.5)
        );
        assert!(censor_covariates(&ten_days(), -0.1, 0).is_err());
    }

    #[test]
    fn scoped_censoring_respects_scope() {
        let cov = ten_days();
        let h = censor_covariates_scoped(&cov, 1.0, 1, CensorScope::HorizonOnly, 3).unwrap();
        assert!(h.entries[..7].iter().all(|e| !e.value.is_censored()));
        assert!(h.entries[7..].iter().all(|e| e.value.is_censored()));
        let p = censor_covariates_scoped(&cov, 0.5, 1, CensorScope::HistoryOnly, 3).unwrap();
        assert_eq!(p.censored_count(), 4); // round(3.5) rounds away from zero
        assert!(p.entries[7..].iter().all(|e| !e.value.is_censored()));
    }
}
