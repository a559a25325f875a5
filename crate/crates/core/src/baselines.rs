//! Classical reference forecasters: seasonal naive and a conditional
//! least-squares AR(p) model on optionally differenced data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::TimeSeries;

/// Ridge damping applied when the lag design is singular.
pub const RIDGE_DAMPING: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("history has {got} points, seasonal naive needs at least {needed}")]
    HistoryTooShort { needed: usize, got: usize },
    #[error("history has {got} points, the model needs at least {needed}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Repeats the last observed cycle of length `period`.
pub fn seasonal_naive_forecast(
    history: &TimeSeries,
    period: usize,
    horizon: usize,
) -> Result<Vec<f64>, BaselineError> {
    seasonal_naive(&history.values(), period, horizon)
}

pub fn seasonal_naive(values: &[f64], period: usize, horizon: usize) -> Result<Vec<f64>, BaselineError> {
    if period == 0 || horizon == 0 {
        return Err(BaselineError::InvalidParameter(
            "period and horizon must be positive".into(),
        ));
    }
    if values.len() < period {
        return Err(BaselineError::HistoryTooShort {
            needed: period,
            got: values.len(),
        });
    }
    let cycle = &values[values.len() - period..];
    Ok((0..horizon).map(|k| cycle[k % period]).collect())
}

/// `z_t = intercept + sum_i coefficients[i] * z_{t-1-i} + e_t` where `z` is
/// the series differenced `differencing` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order_p: usize,
    pub differencing_d: usize,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Mean squared in-sample residual.
    pub training_residual_variance: f64,
    /// Set when the lag design was singular and the ridge-damped solution
    /// was used.
    pub ridge_fallback: bool,
}

fn difference(values: &[f64], d: usize) -> Vec<f64> {
    let mut z = values.to_vec();
    for _ in 0..d {
        z = z.windows(2).map(|w| w[1] - w[0]).collect();
    }
    z
}

/// Cholesky solve of `a x = b` for a symmetric matrix. `None` if a pivot is
/// not safely positive.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let pivot = a[i][i] - s;
                if !(pivot > tol) {
                    return None;
                }
                l[i][i] = pivot.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

pub fn fit_ar(history: &TimeSeries, p: usize, d: usize) -> Result<ArModel, BaselineError> {
    fit_ar_values(&history.values(), p, d)
}

/// Ordinary least squares with intercept, solved on centered regressors.
pub fn fit_ar_values(values: &[f64], p: usize, d: usize) -> Result<ArModel, BaselineError> {
    if d > 1 {
        return Err(BaselineError::InvalidParameter(format!(
            "differencing order must be 0 or 1, got {d}"
        )));
    }
    let needed = p + d + 2;
    if values.len() < needed {
        return Err(BaselineError::InsufficientData {
            needed,
            got: values.len(),
        });
    }
    let z = difference(values, d);
    let rows = z.len() - p;
    let lag = |t: usize, i: usize| z[t - 1 - i];

    let y_mean = z[p..].iter().sum::<f64>() / rows as f64;
    let x_mean: Vec<f64> = (0..p)
        .map(|i| (p..z.len()).map(|t| lag(t, i)).sum::<f64>() / rows as f64)
        .collect();

    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for t in p..z.len() {
        let yc = z[t] - y_mean;
        for i in 0..p {
            let xi = lag(t, i) - x_mean[i];
            xty[i] += xi * yc;
            for j in 0..=i {
                xtx[i][j] += xi * (lag(t, j) - x_mean[j]);
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            xtx[j][i] = xtx[i][j];
        }
    }

    let (coefficients, ridge_fallback) = match cholesky_solve(&xtx, &xty) {
        Some(c) => (c, false),
        None => {
            let trace: f64 = (0..p).map(|i| xtx[i][i]).sum();
            let lambda = if trace > 0.0 {
                RIDGE_DAMPING * trace / p as f64
            } else {
                RIDGE_DAMPING
            };
            let damped: Vec<Vec<f64>> = xtx
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let mut row = row.clone();
                    row[i] += lambda;
                    row
                })
                .collect();
            log::warn!("singular AR({p}) design; using ridge damping {lambda:e}");
            let c = cholesky_solve(&damped, &xty).unwrap_or_else(|| vec![0.0; p]);
            (c, true)
        }
    };

    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    let sse: f64 = (p..z.len())
        .map(|t| {
            let fitted = intercept + (0..p).map(|i| coefficients[i] * lag(t, i)).sum::<f64>();
            (z[t] - fitted).powi(2)
        })
        .sum();

    Ok(ArModel {
        order_p: p,
        differencing_d: d,
        coefficients,
        intercept,
        training_residual_variance: sse / rows as f64,
        ridge_fallback,
    })
}

impl ArModel {
    /// In-sample residuals on the (differenced) history, oldest first.
    pub fn residuals(&self, values: &[f64]) -> Vec<f64> {
        let z = difference(values, self.differencing_d);
        let p = self.order_p;
        (p..z.len())
            .map(|t| {
                let fitted = self.intercept
                    + (0..p)
                        .map(|i| self.coefficients[i] * z[t - 1 - i])
                        .sum::<f64>();
                z[t] - fitted
            })
            .collect()
    }
}

pub fn ar_forecast(
    model: &ArModel,
    history: &TimeSeries,
    horizon: usize,
) -> Result<Vec<f64>, BaselineError> {
    ar_forecast_values(model, &history.values(), horizon)
}

/// Iterates the fitted recursion, feeding predictions back as lags, then
/// integrates differenced forecasts from the last observed level.
pub fn ar_forecast_values(
    model: &ArModel,
    values: &[f64],
    horizon: usize,
) -> Result<Vec<f64>, BaselineError> {
    if model.coefficients.len() != model.order_p || model.differencing_d > 1 {
        return Err(BaselineError::InvalidParameter("inconsistent AR model".into()));
    }
    let needed = (model.order_p + model.differencing_d).max(1);
    if values.len() < needed {
        return Err(BaselineError::InsufficientData {
            needed,
            got: values.len(),
        });
    }
    let mut z = difference(values, model.differencing_d);
    let start = z.len();
    for _ in 0..horizon {
        let t = z.len();
        let next = model.intercept
            + model
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c * z[t - 1 - i])
                .sum::<f64>();
        z.push(next);
    }
    let steps = &z[start..];
    if model.differencing_d == 0 {
        return Ok(steps.to_vec());
    }
    let mut level = *values.last().expect("nonempty");
    Ok(steps
        .iter()
        .map(|dz| {
            level += dz;
            level
        })
        .collect())
}
