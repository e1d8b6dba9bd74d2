//! `conres`: scenario runner binding constellation synthesis, temporal
//! discretization, service routing, importance ranking, and failure-impact
//! evaluation into reproducible artifact directories.

mod artifacts;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use conres_core::contact_plan::to_csv_string;
use conres_core::error::{Error, Result};
use conres_core::failure::{evaluate_failure, evaluate_with_rerouting};
use conres_core::orbital::DelayMode;
use conres_core::report::{
    critical_count_series, emit_csv, eta_series, impact_series, mean_delay_series, MetricSeries,
};
use conres_core::satb::rank_critical;

use artifacts::{impact_json, paths_json, windows_csv, ArtifactWriter};
use scenario::{load_events, resolve, resolve_event, Overrides, ResolvedScenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "conres",
    about = "Constellation resilience analysis over discrete temporal graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the scenario value.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for per-window and per-pair computation.
    #[arg(long)]
    jobs: Option<usize>,
    /// Service duration threshold (s); overrides the scenario value.
    #[arg(long = "threshold-s")]
    threshold_s: Option<f64>,
    /// Delay assignment: physical or uniform; overrides the scenario value.
    #[arg(long = "delay-mode")]
    delay_mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a constellation and write its contact plan.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the baseline pipeline: windows, SATB/ranking matrices, path
    /// index, service paths, and report series.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump per-window snapshot graphs as JSON.
        #[arg(long)]
        dump_snapshots: bool,
    },
    /// Evaluate the scenario's failure events against the baseline.
    Fail {
        #[command(flatten)]
        common: CommonArgs,
        /// Standalone failure-event descriptor file (JSON list); overrides
        /// the scenario's events.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Summarize the series in an existing artifact directory.
    Report {
        /// Artifact directory produced by analyze or fail.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CONRES_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

fn exit_class(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Argument(_) => 1,
        Error::Parse { .. }
        | Error::Schema(_)
        | Error::Validation(_)
        | Error::Range(_)
        | Error::UndefinedRatio => 2,
        Error::Io { .. } => 3,
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::config("jobs", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("jobs", e.to_string()))?;
    }
    Ok(())
}

fn overrides(common: &CommonArgs) -> Result<Overrides> {
    let delay_mode = match &common.delay_mode {
        Some(s) => Some(s.parse::<DelayMode>()?),
        None => None,
    };
    Ok(Overrides {
        seed: common.seed,
        threshold_s: common.threshold_s,
        delay_mode,
    })
}

fn load_and_resolve(common: &CommonArgs) -> Result<(ScenarioConfig, ResolvedScenario, u64)> {
    let cfg = ScenarioConfig::load(&common.config)?;
    let ov = overrides(common)?;
    let seed = ov.seed.unwrap_or(cfg.seed);
    let base = common
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let resolved = resolve(&cfg, &base, &ov)?;
    info!(
        "scenario resolved: {} nodes, {} windows, {} service pairs",
        resolved.table().len(),
        resolved.windows.len(),
        resolved.demand.pair_count()
    );
    Ok((cfg, resolved, seed))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common } => {
            configure_jobs(common.jobs)?;
            let (_, resolved, _) = load_and_resolve(&common)?;
            let mut writer = ArtifactWriter::create(&common.out)?;
            writer.write("contact_plan.csv", &to_csv_string(&resolved.plan))?;
            writer.finish()?;
            info!("contact plan written to {}", common.out.display());
            Ok(())
        }
        Command::Analyze {
            common,
            dump_snapshots,
        } => {
            configure_jobs(common.jobs)?;
            let (_, resolved, _) = load_and_resolve(&common)?;
            let mut writer = ArtifactWriter::create(&common.out)?;
            write_baseline(&mut writer, &resolved, dump_snapshots)?;
            writer.finish()?;
            Ok(())
        }
        Command::Fail { common, events } => {
            configure_jobs(common.jobs)?;
            let (cfg, resolved, seed) = load_and_resolve(&common)?;
            let specs = match &events {
                Some(path) => load_events(path)?,
                None => cfg.events.clone(),
            };
            if specs.is_empty() {
                return Err(Error::config("events", "no failure events to evaluate"));
            }
            let mut writer = ArtifactWriter::create(&common.out)?;
            let baseline = write_baseline(&mut writer, &resolved, false)?;
            let table = resolved.table().clone();
            for (i, spec) in specs.iter().enumerate() {
                let event = resolve_event(spec, seed, &resolved, &baseline)?;
                let prefix = format!("event_{i:02}");
                if event.failed.is_empty() {
                    // A geo event may legitimately cover no satellite: a
                    // no-op, reported as such rather than evaluated.
                    info!("{prefix}: empty failed set, no-op event");
                    writer.write(
                        &format!("{prefix}_impact.json"),
                        &format!(
                            "{}\n",
                            serde_json::json!({
                                "event": {"t_f": event.t_f, "kind": event.kind, "failed": []},
                                "no_op": true,
                            })
                        ),
                    )?;
                    continue;
                }
                let report = if matches!(spec, scenario::EventSpec::GeoCluster { .. }) {
                    // Geo scenarios follow the rerouting protocol.
                    evaluate_with_rerouting(&resolved.graphs, &resolved.demand, &baseline, &event)?
                } else {
                    evaluate_failure(&resolved.graphs, &resolved.demand, &baseline, &event)?
                };
                info!(
                    "{prefix}: {} failed satellites, window_f {}",
                    report.event.failed.len(),
                    report.window_f
                );
                for series in impact_series(&report, &resolved.windows) {
                    writer.write(
                        &format!("{prefix}_{}.csv", series.name),
                        &emit_csv(&series),
                    )?;
                }
                writer.write(
                    &format!("{prefix}_satb_matrix.csv"),
                    &report.updated_matrix.to_csv(&table),
                )?;
                writer.write(
                    &format!("{prefix}_impact.json"),
                    &impact_json(&table, &resolved.demand, &report),
                )?;
            }
            writer.finish()?;
            Ok(())
        }
        Command::Report { out } => cmd_report(&out),
    }
}

/// Write baseline artifacts and return the baseline for further use.
fn write_baseline(
    writer: &mut ArtifactWriter,
    resolved: &ResolvedScenario,
    dump_snapshots: bool,
) -> Result<conres_core::satb::Baseline> {
    let table = resolved.table().clone();
    let baseline = rank_critical(&resolved.graphs, &resolved.demand)?;

    writer.write("contact_plan.csv", &to_csv_string(&resolved.plan))?;
    writer.write("windows.csv", &windows_csv(&resolved.windows))?;
    writer.write("satb_matrix.csv", &baseline.matrix.to_csv(&table))?;
    writer.write("ranking.csv", &baseline.ranking.to_csv(&table))?;
    writer.write(
        "path_index.json",
        &format!(
            "{}\n",
            serde_json::to_string_pretty(
                &baseline.path_index.to_json(&table, &baseline.window_paths)
            )
            .expect("json serializes")
        ),
    )?;
    writer.write(
        "paths.json",
        &paths_json(
            &table,
            &resolved.demand,
            &baseline.window_paths,
            &resolved.windows,
        ),
    )?;

    let series: Vec<MetricSeries> = vec![
        eta_series(
            &baseline.window_paths,
            resolved.demand.pair_count(),
            &resolved.windows,
        ),
        critical_count_series(&baseline.matrix, &resolved.windows),
        mean_delay_series(&baseline.window_paths, &resolved.windows),
    ];
    for s in &series {
        writer.write(&format!("{}.csv", s.name), &emit_csv(s))?;
    }

    if dump_snapshots {
        for g in &resolved.graphs {
            writer.write(
                &format!("snapshots/window_{:04}.json", g.window.index),
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&g.to_json()).expect("json serializes")
                ),
            )?;
        }
    }
    Ok(baseline)
}

/// Print a short textual summary of every metric series in an artifact dir.
fn cmd_report(dir: &Path) -> Result<()> {
    use std::io::Write;
    let manifest_path = dir.join("manifest.json");
    let bytes = std::fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| Error::Schema(format!("manifest: {e}")))?;
    let files = manifest["files"]
        .as_object()
        .ok_or_else(|| Error::Schema("manifest has no files map".into()))?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut emit = |line: String| -> Result<bool> {
        match writeln!(out, "{line}") {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(false),
            Err(e) => Err(Error::io("stdout", e)),
        }
    };
    if !emit(format!(
        "{:<40} {:>8} {:>12} {:>12} {:>12}",
        "series", "rows", "min", "max", "mean"
    ))? {
        return Ok(());
    }
    for name in files.keys().filter(|n| n.ends_with(".csv")) {
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        // Only metric series share this schema; skip plans and matrices.
        if !text.starts_with("window_index,t_start,t_end,value") {
            continue;
        }
        let values: Vec<f64> = text
            .lines()
            .skip(1)
            .filter_map(|line| line.split(',').nth(3))
            .filter_map(|f| f.parse::<f64>().ok())
            .collect();
        let line = if values.is_empty() {
            format!("{name:<40} {:>8} {:>12} {:>12} {:>12}", 0, "-", "-", "-")
        } else {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            format!(
                "{name:<40} {:>8} {:>12.3} {:>12.3} {:>12.3}",
                values.len(),
                min,
                max,
                mean
            )
        };
        if !emit(line)? {
            return Ok(());
        }
    }
    Ok(())
}
