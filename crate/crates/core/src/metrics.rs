//! Point-forecast accuracy metrics.
//!
//! MAPE is reported in percent and skips pairs whose truth is exactly zero;
//! the number of skipped pairs is part of the report.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{predictions} predictions but {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no points to score")]
    EmptyInput,
    #[error("non-finite value in input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when every truth is zero.
    pub mape_percent: Option<f64>,
    pub n_points: usize,
    pub n_skipped_zero_truth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Rmse,
    Mae,
    Mape,
}

impl MetricReport {
    /// Value of `criterion`; undefined MAPE sorts last.
    pub fn get(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Rmse => self.rmse,
            Criterion::Mae => self.mae,
            Criterion::Mape => self.mape_percent.unwrap_or(f64::INFINITY),
        }
    }
}

pub fn compute_metrics(predictions: &[f64], truths: &[f64]) -> Result<MetricReport, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if predictions.iter().chain(truths).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }

    let n = predictions.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut pct_sum = 0.0;
    let mut pct_n = 0usize;
    for (&p, &y) in predictions.iter().zip(truths) {
        let e = p - y;
        abs_sum += e.abs();
        sq_sum += e * e;
        if y != 0.0 {
            pct_sum += (e / y).abs();
            pct_n += 1;
        }
    }
    let mae = abs_sum / n;
    // sqrt of the mean square can round a hair below the mean absolute error
    // when all errors are equal; the power-mean inequality says it cannot.
    let rmse = (sq_sum / n).sqrt().max(mae);
    Ok(MetricReport {
        rmse,
        mae,
        mape_percent: (pct_n > 0).then(|| 100.0 * pct_sum / pct_n as f64),
        n_points: predictions.len(),
        n_skipped_zero_truth: predictions.len() - pct_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast() {
        let r = compute_metrics(&[3.0, -1.0, 7.5], &[3.0, -1.0, 7.5]).unwrap();
        assert_eq!((r.rmse, r.mae, r.mape_percent), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn hand_example() {
        let r = compute_metrics(&[2.0, 2.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.mae - 1.0).abs() < 1e-12);
        assert!((r.rmse - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r.mape_percent.unwrap() - 55.555_555_555_555_56).abs() < 1e-9);
    }

    #[test]
    fn zero_truths_are_skipped_and_counted() {
        let r = compute_metrics(&[1.0, 3.0], &[0.0, 2.0]).unwrap();
        assert_eq!(r.n_skipped_zero_truth, 1);
        assert!((r.mape_percent.unwrap() - 50.0).abs() < 1e-12);
        let all_zero = compute_metrics(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(all_zero.mape_percent, None);
        assert_eq!(all_zero.n_skipped_zero_truth, 2);
        assert_eq!(all_zero.get(Criterion::Mape), f64::INFINITY);
    }

    #[test]
    fn errors() {
        assert_eq!(
            compute_metrics(&[1.0], &[1.0, 2.0]).unwrap_err(),
            MetricsError::LengthMismatch {
                predictions: 1,
                truths: 2
            }
        );
        assert_eq!(compute_metrics(&[], &[]).unwrap_err(), MetricsError::EmptyInput);
        assert_eq!(
            compute_metrics(&[f64::NAN], &[1.0]).unwrap_err(),
            MetricsError::NonFinite
        );
    }
}
