//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary so the per-criterion lines are always visible.
//! Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use covacast::runlog::{config_snapshot, read_log, replication_records, run_records};
use covacast::runner::{run_experiment, RunOptions};
use covacast_testkit::{experiment_config, pattern_data, pattern_values, toy_task, write_dataset, WEEK};
use covacast_core::backend::{
    BackendConfig, CompletionBackend, CompletionRequest, OpenAiBackend, OracleBackend, API_KEY_ENV,
};
use covacast_core::baselines::{ar_forecast_values, fit_ar_values, seasonal_naive};
use covacast_core::covariates::derive_covariate;
use covacast_core::experiment::{
    censoring_sweep, evaluate_cell, select_best, CellKey, EvalConfig, Method, RunRecord,
    Selection, Split,
};
use covacast_core::metrics::{compute_metrics, MetricReport};
use covacast_core::parse::{parse_forecast, render_list, ParseError};
use covacast_core::prompt::render_prompt;
use covacast_core::stats::welch_t_test;
use covacast_core::{
    CovariateKind, CovariateRef, Criterion, PromptFormat, PromptSpec, PromptText,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || a == b
}

fn dow() -> Option<CovariateRef> {
    Some(CovariateRef::Calendar(CovariateKind::DayOfWeek))
}

// ---------------------------------------------------------------- criteria

fn golden_prompts() -> Check {
    let started = Instant::now();
    let task = toy_task();
    let kind = CovariateKind::DayOfWeek;
    let golden_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    for format in PromptFormat::ALL {
        let (covariate, knowledge) = match format {
            PromptFormat::NoCovariate | PromptFormat::PromptCast => (None, None),
            PromptFormat::KnowledgeGuided => (
                Some(CovariateRef::Calendar(kind)),
                Some("Call volumes drop sharply on weekends.".to_string()),
            ),
            _ => (Some(CovariateRef::Calendar(kind)), None),
        };
        let spec = PromptSpec::new(format, covariate.clone(), knowledge).map_err(|e| e.to_string())?;
        let cov = covariate.map(|_| derive_covariate(&task.all_timestamps(), kind));
        let text = render_prompt(&spec, &task, cov.as_ref()).map_err(|e| e.to_string())?.text;
        let path = golden_dir.join(format!("{}.txt", format.name()));
        let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure(text == expected, || format!("{} differs from its golden file", format.name()))?;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.3}s"))?;
    Ok(format!("6/6 formats byte-exact in {:.1} ms", secs * 1e3))
}

/// Straightforward two-pass reference implementation.
fn naive_metrics(p: &[f64], y: &[f64]) -> (f64, f64, Option<f64>) {
    let n = p.len() as f64;
    let mut mae = 0.0;
    for i in 0..p.len() {
        mae += (y[i] - p[i]).abs();
    }
    let mut mse = 0.0;
    for i in 0..p.len() {
        mse += (y[i] - p[i]) * (y[i] - p[i]);
    }
    let nonzero: Vec<usize> = (0..p.len()).filter(|&i| y[i] != 0.0).collect();
    let mape = if nonzero.is_empty() {
        None
    } else {
        Some(nonzero.iter().map(|&i| ((y[i] - p[i]) / y[i]).abs()).sum::<f64>() * 100.0 / nonzero.len() as f64)
    };
    ((mse / n).sqrt(), mae / n, mape)
}

fn metric_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for instance in 0..1000 {
        let n = rng.random_range(1..=10);
        let draw = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(-500.0..500.0)
            }
        };
        let p: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let r = compute_metrics(&p, &y).map_err(|e| e.to_string())?;
        let (rmse, mae, mape) = naive_metrics(&p, &y);
        ensure(close(r.rmse, rmse, 1e-9) && close(r.mae, mae, 1e-9), || {
            format!("instance {instance}: ({}, {}) vs ({rmse}, {mae})", r.rmse, r.mae)
        })?;
        match (r.mape_percent, mape) {
            (Some(a), Some(b)) => ensure(close(a, b, 1e-9), || format!("instance {instance}: mape {a} vs {b}"))?,
            (a, b) => ensure(a == b, || format!("instance {instance}: mape {a:?} vs {b:?}"))?,
        }
        ensure(r.rmse >= r.mae, || format!("instance {instance}: rmse < mae"))?;
        let k = rng.random_range(0.01..100.0);
        let scaled = compute_metrics(
            &p.iter().map(|v| v * k).collect::<Vec<_>>(),
            &y.iter().map(|v| v * k).collect::<Vec<_>>(),
        )
        .map_err(|e| e.to_string())?;
        if let (Some(a), Some(b)) = (r.mape_percent, scaled.mape_percent) {
            ensure(close(a, b, 1e-9), || format!("instance {instance}: MAPE not scale invariant"))?;
        }
    }
    Ok("1000 instances within 1e-9, rmse >= mae, MAPE scale-invariant".into())
}

fn parser_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..1000 {
        let n = rng.random_range(1..=24);
        let v: Vec<f64> = (0..n)
            .map(|_| loop {
                let x = match rng.random_range(0..3) {
                    0 => f64::from_bits(rng.random::<u64>()),
                    1 => rng.random_range(-1e4..1e4),
                    _ => f64::from(rng.random_range(-1000i32..1000)),
                };
                if x.is_finite() {
                    break x;
                }
            })
            .collect();
        let parsed = parse_forecast(&render_list(&v), n).map_err(|e| format!("vector {i}: {e}"))?;
        ensure(parsed.values == v, || format!("vector {i} changed in round trip"))?;
    }
    let fenced = parse_forecast("Here are the values:\n```\n[10.5, 11, 12]\n```", 3).map_err(|e| e.to_string())?;
    ensure(fenced.values == [10.5, 11.0, 12.0], || "code fence fixture".into())?;
    let echoed = parse_forecast("Input was [5, 6, 7, 8]. Forecast: [9, 10]", 2).map_err(|e| e.to_string())?;
    ensure(echoed.values == [9.0, 10.0], || "echoed input fixture".into())?;
    let short = parse_forecast("[1, 2]", 3);
    ensure(short == Err(ParseError::CountMismatch { found: 2, expected: 3 }), || {
        format!("short list fixture gave {short:?}")
    })?;
    Ok("1000 vectors round-trip; fence, echo and short-list fixtures behave".into())
}

fn record(format: PromptFormat, kind: CovariateKind, rmse: f64, mae: f64, mape: Option<f64>) -> RunRecord {
    RunRecord {
        key: CellKey::prompt("call_center", 7, format, Some(CovariateRef::Calendar(kind)), Split::Validation),
        report: MetricReport {
            rmse,
            mae,
            mape_percent: mape,
            n_points: 1,
            n_skipped_zero_truth: 0,
        },
        seed: 0,
        backend_id: "fixture".into(),
        parse_failures: 0,
        scheduled_points: 1,
        uncovered_points: 0,
        wall_time_secs: 0.0,
        prompt_tokens: 0,
        completion_tokens: 0,
        points: vec![],
    }
}

/// Linear scan with the documented tie-break order.
fn naive_argmin(records: &[RunRecord], criterion: Criterion) -> Selection {
    let mut best = &records[0];
    for r in &records[1..] {
        let a = (r.report.get(criterion), r.report.mae);
        let b = (best.report.get(criterion), best.report.mae);
        let names = |x: &RunRecord| {
            (
                x.key.method.format().unwrap().name().to_string(),
                x.key.covariate.as_ref().unwrap().name(),
            )
        };
        let better = a.0 < b.0 || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && names(r) < names(best))));
        if better {
            best = r;
        }
    }
    Selection {
        format: best.key.method.format().unwrap(),
        covariate: best.key.covariate.clone(),
    }
}

fn selection_fixture() -> Check {
    use CovariateKind::{Date, DayOfWeek};
    use PromptFormat::{Contextualized, Coupled, Decoupled};
    let table = [
        record(Coupled, Date, 196.18, 157.05, Some(42.51)),
        record(Decoupled, Date, 187.66, 135.52, Some(42.26)),
        record(Contextualized, Date, 235.56, 175.43, Some(53.71)),
        record(Coupled, DayOfWeek, 109.65, 72.24, Some(15.40)),
        record(Decoupled, DayOfWeek, 209.13, 151.62, Some(47.27)),
        record(Contextualized, DayOfWeek, 213.20, 153.38, Some(47.63)),
    ];
    let chosen = select_best(&table, Criterion::Rmse).map_err(|e| e.to_string())?;
    ensure(
        chosen == Selection { format: Coupled, covariate: dow() },
        || format!("fixture selected {chosen:?}"),
    )?;

    let pairs: Vec<(PromptFormat, CovariateKind)> = [Coupled, Decoupled, Contextualized]
        .into_iter()
        .flat_map(|f| CovariateKind::ALL.into_iter().map(move |k| (f, k)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for set in 0..10_000 {
        let n = rng.random_range(1..=pairs.len());
        let picked = rand::seq::index::sample(&mut rng, pairs.len(), n);
        let records: Vec<RunRecord> = picked
            .iter()
            .map(|i| {
                let (f, k) = pairs[i];
                // Small integer grid so ties are common.
                let rmse = f64::from(rng.random_range(1..6));
                let mae = f64::from(rng.random_range(1..=rmse as i32));
                let mape = rng.random_bool(0.8).then(|| f64::from(rng.random_range(1..6)));
                record(f, k, rmse, mae, mape)
            })
            .collect();
        let criterion = [Criterion::Rmse, Criterion::Mae, Criterion::Mape][rng.random_range(0..3)];
        let got = select_best(&records, criterion).map_err(|e| e.to_string())?;
        let want = naive_argmin(&records, criterion);
        ensure(got == want, || format!("set {set}: {got:?} vs {want:?}"))?;
    }
    Ok("call-center validation fixture h=7 picks Coupled / Day of Week; 10000 random sets agree with a linear scan".into())
}

fn offline_end_to_end() -> Check {
    let started = Instant::now();
    let data = pattern_data(&pattern_values(None));
    let config = EvalConfig::default();
    let oracle = OracleBackend::new();
    let coupled_key = CellKey::prompt("weekday_pattern", 7, PromptFormat::Coupled, dow(), Split::Test);
    let coupled = evaluate_cell(&coupled_key, &data, &oracle, &config).map_err(|e| e.to_string())?;
    let plain_key = CellKey::prompt("weekday_pattern", 7, PromptFormat::NoCovariate, None, Split::Test);
    let plain = evaluate_cell(&plain_key, &data, &oracle, &config).map_err(|e| e.to_string())?;
    let censored_key = CellKey {
        censoring_level: 1.0,
        ..coupled_key.clone()
    };
    let censored = evaluate_cell(&censored_key, &data, &oracle, &config).map_err(|e| e.to_string())?;
    ensure(coupled.report.rmse == 0.0, || format!("coupled rmse {}", coupled.report.rmse))?;
    ensure(plain.report.rmse > 0.0, || "no-covariate rmse is 0".into())?;
    ensure(censored.report == plain.report, || {
        format!("censored {:?} vs no-covariate {:?}", censored.report, plain.report)
    })?;
    let again = evaluate_cell(&coupled_key, &data, &oracle, &config).map_err(|e| e.to_string())?;
    ensure(again.without_wall_time() == coupled.without_wall_time(), || "not deterministic".into())?;

    // Same data through the config-driven runner.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_dataset(dir.path(), &pattern_values(None));
    let cfg = experiment_config(dir.path(), "");
    let outcome = run_experiment(&cfg, RunOptions::default()).map_err(|e| e.to_string())?;
    ensure(outcome.cell_failures == 0, || "runner reported cell failures".into())?;
    ensure(
        outcome.selections == vec![(7, Selection { format: PromptFormat::Coupled, covariate: dow() })],
        || format!("runner selected {:?}", outcome.selections),
    )?;
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "coupled rmse 0, no-covariate rmse {:.3}, censoring 1.0 identical; runner selects Coupled / Day of Week; {secs:.2}s",
        plain.report.rmse
    ))
}

fn censoring_trend() -> Check {
    let levels = [0.0, 0.5, 1.0];
    let mut sums = [0.0; 3];
    let seeds = 20;
    for seed in 0..seeds {
        let data = pattern_data(&pattern_values(Some((1000 + seed, 6.0))));
        let key = CellKey::prompt("weekday_pattern", 7, PromptFormat::Coupled, dow(), Split::Test);
        let records = censoring_sweep(&key, &levels, &[seed], &data, &OracleBackend::new(), &EvalConfig::default())
            .map_err(|e| e.to_string())?;
        for (s, r) in sums.iter_mut().zip(&records) {
            *s += r.report.rmse;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / seeds as f64).collect();
    for w in means.windows(2) {
        ensure(w[1] >= w[0] * 0.98, || format!("mean RMSE by level {means:?}"))?;
    }
    Ok(format!(
        "mean test RMSE over {seeds} seeds at levels 0/0.5/1: {:.2} / {:.2} / {:.2}",
        means[0], means[1], means[2]
    ))
}

fn statistics() -> Check {
    let a = [1.0, 2.0, 3.0];
    let b = [2.0, 3.0, 4.0];
    let r = welch_t_test(&a, &b).map_err(|e| e.to_string())?;
    let reference = StudentsT::new(0.0, 1.0, r.df).map_err(|e| e.to_string())?;
    let p_ref = 2.0 * reference.cdf(-r.t.abs());
    let detail = format!("t = {:.6}, df = {}, p = {:.6} (reference p = {p_ref:.6})", r.t, r.df, r.p_two_sided);
    ensure((r.t + 1.2247).abs() <= 1e-3, || format!("t off: {detail}"))?;
    ensure((r.df - 4.0).abs() <= 1e-9, || format!("df off: {detail}"))?;
    ensure((r.p_two_sided - p_ref).abs() <= 1e-9, || format!("disagrees with reference: {detail}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for pair in 0..10_000 {
        let na = rng.random_range(2..15);
        let nb = rng.random_range(2..15);
        let sa: Vec<f64> = (0..na).map(|_| rng.random_range(-50.0..50.0)).collect();
        let sb: Vec<f64> = (0..nb).map(|_| rng.random_range(-20.0..80.0)).collect();
        let ab = welch_t_test(&sa, &sb).map_err(|e| e.to_string())?;
        let ba = welch_t_test(&sb, &sa).map_err(|e| e.to_string())?;
        ensure((0.0..=1.0).contains(&ab.p_two_sided), || format!("pair {pair}: p = {}", ab.p_two_sided))?;
        ensure(ab.t == -ba.t && close(ab.df, ba.df, 1e-12) && (ab.p_two_sided - ba.p_two_sided).abs() < 1e-12, || {
            format!("pair {pair}: not symmetric")
        })?;
        if pair < 200 {
            let reference = StudentsT::new(0.0, 1.0, ab.df).map_err(|e| e.to_string())?;
            let p_ref = 2.0 * reference.cdf(-ab.t.abs());
            ensure((ab.p_two_sided - p_ref).abs() < 1e-8, || {
                format!("pair {pair}: p {} vs reference {p_ref}", ab.p_two_sided)
            })?;
        }
    }
    ensure((r.p_two_sided - 0.289).abs() <= 1e-3, || {
        format!("p = 0.289 +- 1e-3 not met: {detail}, |p - 0.289| = {:.5}", (r.p_two_sided - 0.289).abs())
    })?;
    Ok(format!("{detail}; 10000 pairs symmetric with p in [0, 1]"))
}

fn baselines() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut y = vec![0.0, 0.0];
    for _ in 0..1100 {
        let n = y.len();
        y.push(0.6 * y[n - 1] - 0.28 * y[n - 2] + normal.sample(&mut rng));
    }
    let y = &y[100..];
    let m = fit_ar_values(y, 2, 0).map_err(|e| e.to_string())?;
    ensure((m.coefficients[0] - 0.6).abs() <= 0.05 && (m.coefficients[1] + 0.28).abs() <= 0.05, || {
        format!("AR(2) estimate {:?}", m.coefficients)
    })?;

    let periodic: Vec<f64> = (0..42).map(|i| WEEK[i % 7]).collect();
    let forecast = seasonal_naive(&periodic[..35], 7, 7).map_err(|e| e.to_string())?;
    let r = compute_metrics(&forecast, &periodic[35..]).map_err(|e| e.to_string())?;
    ensure(r.mae == 0.0, || format!("seasonal naive MAE {}", r.mae))?;
    let data = pattern_data(&pattern_values(None));
    let key = CellKey {
        method: Method::SeasonalNaive { period: 7 },
        ..CellKey::prompt("weekday_pattern", 7, PromptFormat::NoCovariate, None, Split::Test)
    };
    let cell = evaluate_cell(&key, &data, &OracleBackend::new(), &EvalConfig::default()).map_err(|e| e.to_string())?;
    ensure(cell.report.mae == 0.0, || format!("seasonal naive cell MAE {}", cell.report.mae))?;

    let history = [3.0, 4.5, 7.0, 8.0, 11.5];
    let drift = fit_ar_values(&history, 0, 1).map_err(|e| e.to_string())?;
    let diffs: Vec<f64> = history.windows(2).map(|w| w[1] - w[0]).collect();
    let c = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let mut level = history[4];
    let hand: Vec<f64> = (0..5)
        .map(|_| {
            level += c;
            level
        })
        .collect();
    let got = ar_forecast_values(&drift, &history, 5).map_err(|e| e.to_string())?;
    ensure(got == hand, || format!("drift forecast {got:?} vs hand {hand:?}"))?;
    Ok(format!(
        "AR(2) estimate ({:.3}, {:.3}); seasonal naive MAE 0; drift forecast exact",
        m.coefficients[0], m.coefficients[1]
    ))
}

fn replay_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_dataset(dir.path(), &pattern_values(Some((99, 4.0))));
    let extra = r#"
replications = 4
censoring_levels = [0.5, 1.0]
censoring_seeds = 2
parallelism = 3
baselines = [{ kind = "seasonal_naive", period = 7 }, { kind = "ar", p = 2, d = 0 }]

[backend]
kind = "noisy_oracle"
noise_std = 3.0
"#;
    let cfg = experiment_config(dir.path(), extra);
    let first = run_experiment(&cfg, RunOptions::default()).map_err(|e| e.to_string())?;
    let log = read_log(&first.log_path).map_err(|e| e.to_string())?;

    let mut snapshot = config_snapshot(&log).map_err(|e| e.to_string())?;
    snapshot.output_dir = dir.path().join("replay");
    let second = run_experiment(&snapshot, RunOptions::default()).map_err(|e| e.to_string())?;
    let replay = read_log(&second.log_path).map_err(|e| e.to_string())?;

    let strip = |rs: Vec<&RunRecord>| rs.into_iter().map(|r| r.without_wall_time()).collect::<Vec<_>>();
    let (a, b) = (strip(run_records(&log)), strip(run_records(&replay)));
    let (ra, rb) = (strip(replication_records(&log)), strip(replication_records(&replay)));
    ensure(!a.is_empty() && !ra.is_empty(), || "log holds no records".into())?;
    ensure(a == b, || "run records differ after replay".into())?;
    ensure(ra == rb, || "replication records differ after replay".into())?;
    let bits = |rs: &[RunRecord]| -> Vec<u64> {
        rs.iter().flat_map(|r| r.points.iter().map(|p| p.forecast.to_bits())).collect()
    };
    ensure(bits(&a) == bits(&b), || "forecast bits differ".into())?;
    Ok(format!(
        "{} run records and {} replication records identical after replay",
        a.len(),
        ra.len()
    ))
}

fn live_smoke() -> Outcome {
    if std::env::var(API_KEY_ENV).map_or(true, |k| k.trim().is_empty()) {
        return Outcome::Skip(format!("set {API_KEY_ENV} to run against a live endpoint"));
    }
    let mut config = BackendConfig::default();
    if let Ok(url) = std::env::var("COVACAST_ENDPOINT") {
        config.endpoint_url = url;
    }
    if let Ok(model) = std::env::var("COVACAST_MODEL") {
        config.model_name = model;
    }
    config.max_retries = 1;
    let backend = match OpenAiBackend::from_env(config) {
        Ok(b) => b,
        Err(e) => return Outcome::Pass(format!("typed error at construction: {e}")),
    };
    let prompt = PromptText::new(
        "data: [120, 131, 127, 125]. Predict the next 2 values of the time series. Just return the values as a list. No explanation."
            .into(),
    );
    match backend.complete(&CompletionRequest::new(&prompt, 1)) {
        Ok(reply) => match parse_forecast(&reply.text, 2) {
            Ok(p) => Outcome::Pass(format!("parsed {:?}", p.values)),
            Err(e) => Outcome::Fail(format!("reply did not parse: {e}: {:?}", reply.text)),
        },
        Err(e) => Outcome::Pass(format!("typed error: {e}")),
    }
}

fn run(check: fn() -> Check) -> Outcome {
    match catch_unwind(AssertUnwindSafe(check)) {
        Ok(Ok(detail)) => Outcome::Pass(detail),
        Ok(Err(detail)) => Outcome::Fail(detail),
        Err(panic) => Outcome::Fail(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    }
}

fn main() {
    let started = Instant::now();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("golden prompts", Box::new(|| run(golden_prompts))),
        ("metric oracle", Box::new(|| run(metric_oracle))),
        ("parser round-trip", Box::new(|| run(parser_round_trip))),
        ("selection fixture", Box::new(|| run(selection_fixture))),
        ("offline end-to-end", Box::new(|| run(offline_end_to_end))),
        ("censoring trend", Box::new(|| run(censoring_trend))),
        ("statistics", Box::new(|| run(statistics))),
        ("baselines", Box::new(|| run(baselines))),
        ("replay determinism", Box::new(|| run(replay_determinism))),
        ("live backend smoke test", Box::new(live_smoke)),
    ];
    let (mut passed, mut failed, mut skipped) = (0, 0, 0);
    println!();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => {
                passed += 1;
                ("PASS", d)
            }
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => {
                skipped += 1;
                ("SKIP", d)
            }
        };
        println!("{tag} criterion {:>2} {name} [{secs:.2}s]: {detail}", i + 1);
    }
    let total = started.elapsed().as_secs_f64();
    println!("\nacceptance: {passed} passed, {failed} failed, {skipped} skipped in {total:.1}s\n");
    if failed > 0 {
        std::process::exit(1);
    }
}
