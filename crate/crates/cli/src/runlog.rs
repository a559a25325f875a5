//! Append-only JSONL run log.
//!
//! Every line is one [`LogEntry`]: a sequence number, the run seed and a
//! tagged body. The first entry of a log is always the config snapshot.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use covacast_core::experiment::{CellKey, RunRecord, Split, TaskEvent};
use covacast_core::stats::WelchResult;
use covacast_core::{CovariateRef, Criterion, PromptFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("run log {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("run log line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("run log does not start with a config snapshot")]
    MissingConfig,
}

/// Welch test between the selected pair and one comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestEntry {
    pub dataset_id: String,
    pub horizon: usize,
    pub split: Split,
    pub criterion: Criterion,
    pub best: String,
    pub other: String,
    /// `None` when the statistic is infinite (constant, different samples).
    pub t: Option<f64>,
    pub df: f64,
    pub p_two_sided: f64,
    pub degenerate: bool,
    pub n_best: usize,
    pub n_other: usize,
}

impl TTestEntry {
    pub fn welch(&self) -> WelchResult {
        WelchResult {
            t: self.t.unwrap_or(f64::INFINITY),
            df: self.df,
            p_two_sided: self.p_two_sided,
            degenerate: self.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogBody {
    Config {
        config: Box<ExperimentConfig>,
        backend_id: String,
        dry_run: bool,
    },
    Prompt {
        cell: CellKey,
        task: usize,
        text: String,
        token_estimate: usize,
    },
    Reply {
        cell: CellKey,
        task: usize,
        attempt: u32,
        text: String,
        backend_attempts: u32,
    },
    ParseFailure {
        cell: CellKey,
        task: usize,
        attempt: u32,
        reply: String,
        error: String,
    },
    RunRecord {
        record: Box<RunRecord>,
    },
    /// One replication of a compared test cell, sampled at the replication
    /// temperature.
    Replication {
        record: Box<RunRecord>,
    },
    Selection {
        dataset_id: String,
        horizon: usize,
        criterion: Criterion,
        format: PromptFormat,
        covariate: Option<CovariateRef>,
    },
    TTest(TTestEntry),
    CellFailure {
        cell: CellKey,
        error: String,
    },
}

impl LogBody {
    pub fn from_event(cell: &CellKey, event: TaskEvent) -> LogBody {
        let cell = cell.clone();
        match event {
            TaskEvent::Prompt {
                task,
                text,
                token_estimate,
            } => LogBody::Prompt {
                cell,
                task,
                text,
                token_estimate,
            },
            TaskEvent::Reply {
                task,
                attempt,
                text,
                backend_attempts,
            } => LogBody::Reply {
                cell,
                task,
                attempt,
                text,
                backend_attempts,
            },
            TaskEvent::ParseFailure {
                task,
                attempt,
                reply,
                error,
            } => LogBody::ParseFailure {
                cell,
                task,
                attempt,
                reply,
                error,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub body: LogBody,
}

/// Single writer; entries are flushed line by line.
pub struct RunLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
    seq: u64,
    seed: u64,
}

impl RunLogWriter {
    pub fn create(path: &Path, seed: u64) -> Result<Self, RunLogError> {
        let io = |source| RunLogError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let file = File::create(path).map_err(io)?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            seq: 0,
            seed,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, body: LogBody) -> Result<(), RunLogError> {
        let entry = LogEntry {
            seq: self.seq,
            seed: self.seed,
            body,
        };
        let line = serde_json::to_string(&entry).map_err(|source| RunLogError::Json {
            line: self.seq as usize + 1,
            source,
        })?;
        let io = |source| RunLogError::Io {
            path: self.path.clone(),
            source,
        };
        writeln!(self.out, "{line}").map_err(io)?;
        self.out.flush().map_err(io)?;
        self.seq += 1;
        Ok(())
    }
}

pub fn parse_log(text: &str) -> Result<Vec<LogEntry>, RunLogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| RunLogError::Json { line: i + 1, source }))
        .collect()
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, RunLogError> {
    let file = File::open(path).map_err(|source| RunLogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| RunLogError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line).map_err(|source| RunLogError::Json { line: i + 1, source })?);
    }
    Ok(entries)
}

/// The config snapshot a log was produced from.
pub fn config_snapshot(entries: &[LogEntry]) -> Result<ExperimentConfig, RunLogError> {
    match entries.first().map(|e| &e.body) {
        Some(LogBody::Config { config, .. }) => Ok((**config).clone()),
        _ => Err(RunLogError::MissingConfig),
    }
}

pub fn run_records(entries: &[LogEntry]) -> Vec<&RunRecord> {
    entries
        .iter()
        .filter_map(|e| match &e.body {
            LogBody::RunRecord { record } => Some(record.as_ref()),
            _ => None,
        })
        .collect()
}

pub fn replication_records(entries: &[LogEntry]) -> Vec<&RunRecord> {
    entries
        .iter()
        .filter_map(|e| match &e.body {
            LogBody::Replication { record } => Some(record.as_ref()),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log/run.jsonl");
        let mut w = RunLogWriter::create(&path, 9).unwrap();
        let entry = TTestEntry {
            dataset_id: "d".into(),
            horizon: 1,
            split: Split::Test,
            criterion: Criterion::Mae,
            best: "a".into(),
            other: "b".into(),
            t: None,
            df: 4.0,
            p_two_sided: 0.0,
            degenerate: true,
            n_best: 3,
            n_other: 3,
        };
        w.append(LogBody::TTest(entry.clone())).unwrap();
        w.append(LogBody::Selection {
            dataset_id: "d".into(),
            horizon: 2,
            criterion: Criterion::Rmse,
            format: PromptFormat::Coupled,
            covariate: Some("day_of_week".parse().unwrap()),
        })
        .unwrap();
        drop(w);
        let entries = read_log(&path).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].seq, 1);
        assert!(entries.iter().all(|e| e.seed == 9));
        assert_eq!(entries[0].body, LogBody::TTest(entry));
        assert!(matches!(config_snapshot(&entries), Err(RunLogError::MissingConfig)));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("\"kind\":\"selection\""));
    }
}
