use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use jip_core::dataset::{save_features, save_labels, save_pairing};
use jip_core::synth_generate;
use jip_cli::config::DataSource;
use jip_cli::report::records_from_csv;
use jip_cli::{ablation, grid_search, run_single, ExperimentConfig, ReportFormat, RunReport};

#[derive(Parser)]
#[command(name = "jip", version, about = "Heterogeneous domain adaptation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set params.alpha=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Report path; stdout when neither this nor `output.path` is set.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// `json_lines` or `csv`; overrides `output.format`.
    #[arg(short, long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit once per seed at the configured parameters.
    Run(ConfigArgs),
    /// Evaluate every (alpha, beta, lambda, dim) grid tuple.
    Grid(ConfigArgs),
    /// Compare the full model with alpha/beta/lambda zeroed variants.
    Ablate(ConfigArgs),
    /// Write a synthetic dataset as CSV files.
    Synth {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Re-encode a report (JSON lines or CSV input).
    Report {
        input: PathBuf,
        #[arg(short, long, default_value = "csv")]
        format: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let mut overrides = args.overrides.clone();
    if let Some(f) = &args.format {
        overrides.push(format!("output.format={f}"));
    }
    ExperimentConfig::load(args.config.as_deref(), &overrides).context("loading config")
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn experiment(args: &ConfigArgs, f: fn(&ExperimentConfig) -> jip_cli::Result<RunReport>) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let report = f(&cfg)?;
    let s = &report.summary;
    if let Some(best) = &s.best {
        log::info!(
            "best tuple alpha={} beta={} lambda={} dim={}: mean accuracy {:.4}",
            best.alpha,
            best.beta,
            best.lambda,
            best.dim,
            best.mean_accuracy
        );
    }
    if s.failures > 0 {
        log::warn!("{} of {} runs failed", s.failures, s.records);
    }
    let out = args.out.clone().or_else(|| cfg.output_path.clone());
    emit(&report.render(cfg.format)?, out.as_deref())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => experiment(&a, run_single),
        Command::Grid(a) => experiment(&a, grid_search),
        Command::Ablate(a) => experiment(&a, ablation),
        Command::Synth {
            config,
            overrides,
            seed,
            out_dir,
        } => {
            let cfg = ExperimentConfig::load(config.as_deref(), &overrides)?;
            let DataSource::Synthetic { spec, .. } = &cfg.data else {
                bail!("synth needs data.mode = \"synthetic\"");
            };
            let bench = synth_generate(spec, seed)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let ds = &bench.dataset;
            save_features(&out_dir.join("source_features.csv"), &ds.source.features)?;
            save_labels(&out_dir.join("source_labels.csv"), &ds.source.labels)?;
            save_features(&out_dir.join("target_features.csv"), &ds.target.features)?;
            save_labels(&out_dir.join("target_labels.csv"), &ds.target.labels)?;
            save_pairing(&out_dir.join("pairs.csv"), &ds.pairs)?;
            let truth: Vec<_> = bench.target_truth.iter().map(|&c| Some(c)).collect();
            save_labels(&out_dir.join("target_truth.csv"), &truth)?;
            Ok(())
        }
        Command::Report { input, format, out } => {
            let format: ReportFormat = format.parse()?;
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let rendered = match RunReport::from_json_lines(&text, &input) {
                Ok(report) => report.render(format)?,
                Err(json_err) => {
                    let records = records_from_csv(&text, &input)
                        .with_context(|| format!("{input:?} is neither a JSON-lines report ({json_err}) nor a CSV report"))?;
                    match format {
                        ReportFormat::Csv => jip_cli::report::records_to_csv(&records)?,
                        ReportFormat::JsonLines => bail!("a CSV report has no config; it cannot be turned into JSON lines"),
                    }
                }
            };
            emit(&rendered, out.as_deref())
        }
    }
}
