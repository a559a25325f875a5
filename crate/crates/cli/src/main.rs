use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use covacast::config::{BackendChoice, ExperimentConfig};
use covacast::report::{render_report, write_plot_data, ReportStyle};
use covacast::runlog::read_log;
use covacast::runner::{run_experiment, RunOptions};

#[derive(Parser)]
#[command(name = "covacast", version, about = "Covariate-aware LLM forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OfflineBackend {
    Oracle,
    NoisyOracle,
}

#[derive(clap::Args)]
struct Overrides {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the configured replication count.
    #[arg(long)]
    replications: Option<u32>,
    /// Replaces the configured backend with an offline one.
    #[arg(long, value_enum)]
    offline_backend: Option<OfflineBackend>,
    /// Noise level for `--offline-backend noisy-oracle`.
    #[arg(long, default_value_t = 1.0)]
    noise_std: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its run log.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Render and log prompts without calling the backend.
        #[arg(long)]
        dry_run: bool,
    },
    /// Render report tables and plot-data files from a run log.
    Report {
        runlog: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        style: ReportStyle,
        /// Writes the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot-data directory; defaults to `plots/` next to the run log.
        #[arg(long)]
        plots_dir: Option<PathBuf>,
    },
    /// Check a config file and its dataset.
    ValidateConfig { config: PathBuf },
    /// Render all prompts of a config into the dry-run log.
    RenderPrompts {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Accepted for symmetry with `run`; prompt rendering never calls a backend.
        #[arg(long)]
        dry_run: bool,
    },
}

fn load(path: &Path, o: &Overrides) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = o.seed {
        config.seed = seed;
    }
    if let Some(dir) = &o.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(n) = o.replications {
        config.replications = n;
    }
    match o.offline_backend {
        Some(OfflineBackend::Oracle) => config.backend = BackendChoice::Oracle,
        Some(OfflineBackend::NoisyOracle) => {
            config.backend = BackendChoice::NoisyOracle { noise_std: o.noise_std }
        }
        None => {}
    }
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> Result<i32, Box<dyn std::error::Error>> {
    match command {
        Command::Run {
            config,
            overrides,
            dry_run,
        } => {
            let config = load(&config, &overrides)?;
            let outcome = run_experiment(&config, RunOptions { dry_run })?;
            for (h, s) in &outcome.selections {
                let cov = s.covariate.as_ref().map(|c| c.label()).unwrap_or_else(|| "-".into());
                println!("horizon {h}: selected {} / {cov}", s.format.label());
            }
            if dry_run {
                println!("{} prompts rendered", outcome.prompts_rendered);
            }
            println!("run log: {}", outcome.log_path.display());
            if outcome.cell_failures > 0 {
                eprintln!("{} cell(s) failed", outcome.cell_failures);
            }
            Ok(outcome.exit_code())
        }
        Command::Report {
            runlog,
            style,
            out,
            plots_dir,
        } => {
            let entries = read_log(&runlog)?;
            let text = render_report(&entries, style)?;
            let plots_dir = plots_dir.unwrap_or_else(|| {
                runlog.parent().unwrap_or(Path::new(".")).join("plots")
            });
            let files = write_plot_data(&entries, &plots_dir)?;
            match out {
                Some(path) => std::fs::write(&path, text)?,
                None => print!("{text}"),
            }
            eprintln!("{} plot-data files in {}", files.len(), plots_dir.display());
            Ok(0)
        }
        Command::ValidateConfig { config } => {
            let config = ExperimentConfig::load(&config)?;
            let data = covacast::runner::load_eval_data(&config)?;
            covacast_core::series::split_series(&data.series, &data.splits)?;
            println!(
                "ok: {} points, {} horizons, {} candidate pairs",
                data.series.len(),
                config.horizons.len(),
                covacast::runner::candidate_pairs(&config).len()
            );
            Ok(0)
        }
        Command::RenderPrompts {
            config, overrides, ..
        } => {
            let config = load(&config, &overrides)?;
            let outcome = run_experiment(&config, RunOptions { dry_run: true })?;
            println!("{} prompts rendered into {}", outcome.prompts_rendered, outcome.log_path.display());
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
