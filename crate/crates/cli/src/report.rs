//! Report tables and plot-data files rendered from a run log.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use covacast_core::experiment::{CellKey, Method, RunRecord, Split};
use covacast_core::stats::format_p_value;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runlog::{replication_records, run_records, LogBody, LogEntry};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("run log holds no run records")]
    EmptyLog,
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportStyle {
    Markdown,
    Csv,
}

/// One row of the cell table; metrics are averaged over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub dataset: String,
    pub horizon: usize,
    pub censoring_level: f64,
    pub split: Split,
    pub method: String,
    pub covariate: String,
    pub rmse: f64,
    pub mae: f64,
    pub mape_percent: Option<f64>,
    pub points: usize,
    pub replications: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn method_label(key: &CellKey) -> String {
    key.method.label()
}

fn covariate_label(key: &CellKey) -> String {
    key.covariate.as_ref().map(|c| c.label()).unwrap_or_else(|| "-".into())
}

fn group<'a>(records: &[&'a RunRecord]) -> BTreeMap<CellKey, Vec<&'a RunRecord>> {
    let mut groups: BTreeMap<CellKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.key.without_replication()).or_default().push(r);
    }
    groups
}

/// Table rows in sorted key order, one per cell ignoring replication.
pub fn cell_rows(entries: &[LogEntry]) -> Vec<CellRow> {
    group(&run_records(entries))
        .into_iter()
        .map(|(key, rs)| CellRow {
            dataset: key.dataset_id.clone(),
            horizon: key.horizon,
            censoring_level: key.censoring_level,
            split: key.split,
            method: method_label(&key),
            covariate: covariate_label(&key),
            rmse: mean(rs.iter().map(|r| r.report.rmse)).expect("nonempty group"),
            mae: mean(rs.iter().map(|r| r.report.mae)).expect("nonempty group"),
            mape_percent: mean(rs.iter().filter_map(|r| r.report.mape_percent)),
            points: rs[0].report.n_points,
            replications: rs.len(),
        })
        .collect()
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_mape(x: Option<f64>) -> String {
    x.map(fmt2).unwrap_or_else(|| "n/a".into())
}

pub fn render_report(entries: &[LogEntry], style: ReportStyle) -> Result<String, ReportError> {
    let rows = cell_rows(entries);
    if rows.is_empty() && replication_records(entries).is_empty() {
        return Err(ReportError::EmptyLog);
    }
    match style {
        ReportStyle::Markdown => Ok(render_markdown(entries, &rows)),
        ReportStyle::Csv => render_csv(&rows),
    }
}

const TABLE_HEADER: &str = "| Prompt | Covariate | RMSE | MAE | MAPE (%) | Points | Reps |\n|---|---|---|---|---|---|---|\n";

fn render_markdown(entries: &[LogEntry], rows: &[CellRow]) -> String {
    let mut out = String::from("# Forecast evaluation report\n");
    let mut section: Option<(&str, usize, f64)> = None;
    let mut split: Option<Split> = None;
    for row in rows {
        let this = (row.dataset.as_str(), row.horizon, row.censoring_level);
        if section != Some(this) {
            section = Some(this);
            split = None;
            let _ = write!(out, "\n## {}, horizon {}", row.dataset, row.horizon);
            if row.censoring_level > 0.0 {
                let _ = write!(out, ", censoring {}", row.censoring_level);
            }
            out.push('\n');
        }
        if split != Some(row.split) {
            split = Some(row.split);
            let title = match row.split {
                Split::Validation => "Validation",
                Split::Test => "Test",
            };
            let _ = write!(out, "\n### {title}\n\n{TABLE_HEADER}");
        }
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            row.method,
            row.covariate,
            fmt2(row.rmse),
            fmt2(row.mae),
            fmt_mape(row.mape_percent),
            row.points,
            row.replications
        );
    }

    let selections: Vec<_> = entries
        .iter()
        .filter_map(|e| match &e.body {
            LogBody::Selection {
                dataset_id,
                horizon,
                criterion,
                format,
                covariate,
            } => Some((dataset_id, horizon, criterion, format, covariate)),
            _ => None,
        })
        .collect();
    if !selections.is_empty() {
        out.push_str("\n## Selected prompt designs\n\n| Dataset | Horizon | Criterion | Prompt | Covariate |\n|---|---|---|---|---|\n");
        for (d, h, c, f, cov) in selections {
            let cov = cov.as_ref().map(|c| c.label()).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "| {d} | {h} | {c:?} | {} | {cov} |", f.label());
        }
    }

    let reps = group(&replication_records(entries));
    if !reps.is_empty() {
        out.push_str("\n## Replications\n\n| Dataset | Horizon | Split | Prompt | Covariate | Reps | RMSE mean | RMSE sd | MAE mean | MAE sd | MAPE mean (%) |\n|---|---|---|---|---|---|---|---|---|---|---|\n");
        for (key, rs) in &reps {
            let rmse: Vec<f64> = rs.iter().map(|r| r.report.rmse).collect();
            let mae: Vec<f64> = rs.iter().map(|r| r.report.mae).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                key.dataset_id,
                key.horizon,
                key.split.name(),
                method_label(key),
                covariate_label(key),
                rs.len(),
                fmt2(mean(rmse.iter().copied()).unwrap_or(f64::NAN)),
                fmt2(std_dev(&rmse)),
                fmt2(mean(mae.iter().copied()).unwrap_or(f64::NAN)),
                fmt2(std_dev(&mae)),
                fmt_mape(mean(rs.iter().filter_map(|r| r.report.mape_percent))),
            );
        }
    }

    let tests: Vec<_> = entries
        .iter()
        .filter_map(|e| match &e.body {
            LogBody::TTest(t) => Some(t),
            _ => None,
        })
        .collect();
    if !tests.is_empty() {
        out.push_str("\n## Pairwise t-tests\n\n| Dataset | Horizon | Split | Metric | Best | Other | t | df | p |\n|---|---|---|---|---|---|---|---|---|\n");
        for t in tests {
            let stat = match t.t {
                Some(v) => format!("{v:.3}"),
                None => "inf".into(),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:?} | {} | {} | {} | {:.2} | {} |",
                t.dataset_id,
                t.horizon,
                t.split.name(),
                t.criterion,
                t.best,
                t.other,
                stat,
                t.df,
                format_p_value(t.p_two_sided)
            );
        }
    }

    let failures = entries
        .iter()
        .filter(|e| matches!(e.body, LogBody::CellFailure { .. }))
        .count();
    if failures > 0 {
        let _ = writeln!(out, "\n{failures} cell(s) failed; see the run log for details.");
    }
    out
}

fn render_csv(rows: &[CellRow]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io {
        path: PathBuf::from("<memory>"),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads a CSV-style report back into rows.
pub fn parse_csv_report(text: &str) -> Result<Vec<CellRow>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// File stem of a cell's plot-data file.
pub fn plot_file_name(key: &CellKey) -> String {
    let method = match key.method {
        Method::Prompt(f) => f.name().to_string(),
        m => m.name(),
    };
    let cov = key.covariate.as_ref().map(|c| c.name()).unwrap_or_else(|| "none".into());
    format!(
        "{}_h{}_{}_{}_{}_c{}_r{}.csv",
        slug(&key.dataset_id),
        key.horizon,
        key.split.name(),
        slug(&method),
        slug(&cov),
        slug(&key.censoring_level.to_string()),
        key.replication
    )
}

/// Writes one truth/forecast CSV per run record into `dir`.
pub fn write_plot_data(entries: &[LogEntry], dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for record in run_records(entries) {
        let path = dir.join(plot_file_name(&record.key));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["task", "timestamp", "truth", "forecast"])?;
        for p in &record.points {
            w.write_record([
                p.task.to_string(),
                p.timestamp.to_rfc3339(),
                p.truth.to_string(),
                p.forecast.to_string(),
            ])?;
        }
        w.flush().map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
