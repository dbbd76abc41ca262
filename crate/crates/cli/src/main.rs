//! `dmcsim`: run MVDC supercapacitor-charging scenarios from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dmc_core::config::{parse_config_file, resolved_dump};
use dmc_core::scenario::{canonical_cases, run, summarize, RunOutput, ScenarioConfig};
use dmc_core::telemetry::{
    format_summary_table, read_telemetry, write_summary_csv, write_telemetry, SummaryRow,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "dmcsim",
    version,
    about = "MVDC shipboard supercapacitor-charging simulator with disturbance-metric control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Scenario configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the simulation time step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Record every n-th step.
    #[arg(long)]
    decimation: Option<u32>,
    /// Reserved for future stochastic extensions; the model is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario.
    Run(CommonOpts),
    /// Run the four canonical test cases and write a combined result table.
    Batch(CommonOpts),
    /// Recompute a summary row from a telemetry CSV.
    Summarize {
        /// Telemetry CSV produced by `run` or `batch`.
        csv: PathBuf,
        /// Row label for the recomputed summary.
        #[arg(long, default_value = "recomputed")]
        label: String,
    },
    /// Parse and validate a configuration file, reporting the first problem.
    ValidateConfig {
        /// Configuration file to check.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(opts) => cmd_run(opts),
        Command::Batch(opts) => cmd_batch(opts),
        Command::Summarize { csv, label } => cmd_summarize(&csv, &label),
        Command::ValidateConfig { config } => cmd_validate(&config),
    }
}

fn load_config(opts: &CommonOpts) -> Result<ScenarioConfig> {
    let mut cfg = match &opts.config {
        Some(path) => {
            parse_config_file(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(dt) = opts.dt {
        cfg.dt_s = dt;
        cfg.limits.control_period_s = cfg.limits.control_period_s.max(dt);
    }
    if let Some(d) = opts.duration {
        cfg.sim_duration_s = d;
    }
    if let Some(n) = opts.decimation {
        cfg.decimation = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes one run's artifacts into `<out>/<label>`, built in a temporary
/// directory and renamed into place so readers never see partial output.
fn persist_run(out_root: &Path, cfg: &ScenarioConfig, output: &RunOutput) -> Result<PathBuf> {
    fs::create_dir_all(out_root).with_context(|| format!("creating {}", out_root.display()))?;
    let tmp = out_root.join(format!(".tmp-{}", cfg.label));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;

    write_telemetry(&output.records, &tmp.join("telemetry.csv"))?;
    write_summary_csv(
        std::slice::from_ref(&output.summary),
        &tmp.join("summary.csv"),
    )?;
    fs::write(
        tmp.join("summary.txt"),
        format_summary_table(std::slice::from_ref(&output.summary)),
    )?;
    fs::write(tmp.join("resolved.conf"), resolved_dump(cfg))?;

    let dest = out_root.join(&cfg.label);
    if dest.exists() {
        fs::remove_dir_all(&dest)?;
    }
    fs::rename(&tmp, &dest)?;
    Ok(dest)
}

fn write_manifest(
    path: &Path,
    config_path: Option<&Path>,
    out_dir: &Path,
    runs: &[(String, Duration)],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("tool_version = {VERSION}\n"));
    text.push_str(&format!(
        "config = {}\n",
        config_path
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "(builtin defaults)".into())
    ));
    text.push_str(&format!("output_dir = {}\n", out_dir.display()));
    for (label, wall) in runs {
        text.push_str(&format!(
            "scenario {label}: wall {:.3} s\n",
            wall.as_secs_f64()
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

fn cmd_run(opts: CommonOpts) -> Result<()> {
    let cfg = load_config(&opts)?;
    let output = run(&cfg)?;
    let dest = persist_run(&opts.out, &cfg, &output)?;
    write_manifest(
        &dest.join("manifest.txt"),
        opts.config.as_deref(),
        &dest,
        &[(cfg.label.clone(), output.wall_time)],
    )?;
    print!(
        "{}",
        format_summary_table(std::slice::from_ref(&output.summary))
    );
    Ok(())
}

fn cmd_batch(opts: CommonOpts) -> Result<()> {
    let base = load_config(&opts)?;
    let cases = canonical_cases(&base);

    let threads = std::env::var("DMC_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(cases.len());

    let mut results: Vec<Option<Result<RunOutput>>> = (0..cases.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for chunk in cases
            .iter()
            .zip(results.iter_mut())
            .collect::<Vec<_>>()
            .chunks_mut(threads.max(1))
        {
            let mut handles = Vec::new();
            for (cfg, slot) in chunk.iter_mut() {
                let cfg = (*cfg).clone();
                let handle = scope.spawn(move || run(&cfg).map_err(anyhow::Error::from));
                handles.push((handle, slot));
            }
            for (handle, slot) in handles {
                **slot = Some(handle.join().expect("scenario thread panicked"));
            }
        }
    });

    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut walls = Vec::new();
    for (cfg, result) in cases.iter().zip(results) {
        let output = result
            .expect("all scenarios executed")
            .context(cfg.label.clone())?;
        rows.push(output.summary.clone());
        walls.push((cfg.label.clone(), output.wall_time));
        persist_run(&opts.out, cfg, &output)?;
    }

    write_summary_csv(&rows, &opts.out.join("summary_table.csv"))?;
    let table = format_summary_table(&rows);
    fs::write(opts.out.join("summary_table.txt"), &table)?;
    write_manifest(
        &opts.out.join("manifest.txt"),
        opts.config.as_deref(),
        &opts.out,
        &walls,
    )?;
    print!("{table}");
    Ok(())
}

fn cmd_summarize(csv: &Path, label: &str) -> Result<()> {
    let records = read_telemetry(csv)?;
    let row = summarize(&records, label);
    print!("{}", format_summary_table(std::slice::from_ref(&row)));
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<()> {
    let cfg = parse_config_file(config).with_context(|| format!("reading {}", config.display()))?;
    cfg.validate()?;
    if cfg.controller_mode == dmc_core::controller::MetricMode::M1 && cfg.limits.m1_limit_v <= 0.0 {
        bail!("m1_limit_v must be positive");
    }
    Ok(())
}
