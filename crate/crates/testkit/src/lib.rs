//! Synthetic fixtures shared by the acceptance suite.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use covacast::config::ExperimentConfig;
use covacast_core::experiment::EvalData;
use covacast_core::series::ForecastTask;
use covacast_core::{DateRange, Frequency, SplitSpec, TimeSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// One week of a weekday-heavy volume pattern, Monday first.
pub const WEEK: [f64; 7] = [120.0, 131.0, 127.0, 125.0, 118.0, 64.0, 52.0];
pub const WEEKS: usize = 12;
pub const DATASET_ID: &str = "weekday_pattern";

pub fn monday() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

/// `WEEKS` repetitions of [`WEEK`], optionally with seeded Gaussian noise
/// `(seed, std)`.
pub fn pattern_values(noise: Option<(u64, f64)>) -> Vec<f64> {
    let mut values: Vec<f64> = (0..WEEKS * 7).map(|i| WEEK[i % 7]).collect();
    if let Some((seed, std)) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).expect("valid std");
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    values
}

/// Daily series starting on a Monday; the third-to-last week is validation,
/// the last two weeks are test.
pub fn pattern_data(values: &[f64]) -> EvalData {
    let series = TimeSeries::from_values(monday(), Frequency::Daily, values).unwrap();
    let ts = |i: usize| series.points()[i].timestamp;
    let n = values.len();
    let splits = SplitSpec {
        validation: DateRange::new(ts(n - 21), ts(n - 15)),
        test: DateRange::new(ts(n - 14), ts(n - 1)),
    };
    EvalData::new(DATASET_ID, series, splits)
}

/// Writes `values` as a daily CSV (`date,volume`) and returns its path.
pub fn write_dataset(dir: &Path, values: &[f64]) -> PathBuf {
    let path = dir.join("pattern.csv");
    let mut text = String::from("date,volume\n");
    for (i, v) in values.iter().enumerate() {
        let ts = monday() + Duration::days(i as i64);
        text.push_str(&format!("{},{v}\n", ts.format("%Y-%m-%d")));
    }
    std::fs::write(&path, text).unwrap();
    path
}

/// Config for the CSV written by [`write_dataset`] with the default
/// 12-week layout; `extra` is spliced into the top-level table.
pub fn experiment_config(dir: &Path, extra: &str) -> ExperimentConfig {
    let toml = format!(
        r#"
horizons = [7]
formats = ["no_covariate", "coupled", "decoupled"]
covariates = ["date", "day_of_week"]
comparators = ["no_covariate", "prompt_cast"]
seed = 20240101
output_dir = "out"
{extra}

[dataset]
id = "{DATASET_ID}"
path = "pattern.csv"
timestamp_column = "date"
value_column = "volume"
frequency = "daily"

[splits.validation]
start = "2024-03-04"
end = "2024-03-10"

[splits.test]
start = "2024-03-11"
end = "2024-03-24"
"#
    );
    let path = dir.join("experiment.toml");
    std::fs::write(&path, toml).unwrap();
    ExperimentConfig::load(&path).unwrap()
}

/// Six-point toy series: four history points, horizon 2.
pub fn toy_task() -> ForecastTask {
    let series =
        TimeSeries::from_values(monday(), Frequency::Daily, &[120.0, 135.5, 128.0, 131.0, 96.0, 88.0]).unwrap();
    ForecastTask {
        history: series.slice(0, 4).unwrap(),
        origin: series.points()[4].timestamp,
        horizon: 2,
        truth: series.values()[4..].to_vec(),
        truth_timestamps: series.timestamps()[4..].to_vec(),
        future_covariates: vec![],
    }
}
