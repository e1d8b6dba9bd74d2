//! Aggregation of per-window metrics into byte-stable CSV/JSON series:
//! critical-satellite counts, mean end-to-end delay, and connectivity
//! ratios.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::failure::ImpactReport;
use crate::routing::WindowPaths;
use crate::satb::SatbMatrix;
use crate::temporal_graph::TimeWindow;

/// Unit of a series; controls fixed-precision formatting (percent 2
/// decimals, delays 3, counts plain integers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Count,
    Percent,
    DelayMs,
}

/// One named per-window metric with optional routed-pair counts attached.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub unit: Unit,
    pub windows: Vec<TimeWindow>,
    /// One value per window; `None` marks an undefined entry (never 0).
    pub values: Vec<Option<f64>>,
    pub routed: Option<Vec<usize>>,
    pub meta: BTreeMap<String, String>,
}

impl MetricSeries {
    fn format_value(&self, v: f64) -> String {
        match self.unit {
            Unit::Count => format!("{}", v as u64),
            Unit::Percent => format!("{v:.2}"),
            Unit::DelayMs => format!("{v:.3}"),
        }
    }
}

/// Number of critical satellites (SATB > 0) per window.
pub fn critical_count_series(matrix: &SatbMatrix, windows: &[TimeWindow]) -> MetricSeries {
    let values = matrix
        .rows
        .iter()
        .map(|row| Some(row.iter().filter(|&&v| v > 0).count() as f64))
        .collect();
    MetricSeries {
        name: "critical_count".into(),
        unit: Unit::Count,
        windows: windows.to_vec(),
        values,
        routed: None,
        meta: BTreeMap::new(),
    }
}

/// Mean end-to-end delay over routed pairs per window, with the routed
/// count attached. Windows with no routed pair are marked absent.
pub fn mean_delay_series(paths: &[WindowPaths], windows: &[TimeWindow]) -> MetricSeries {
    let mut values = Vec::with_capacity(paths.len());
    let mut routed = Vec::with_capacity(paths.len());
    for wp in paths {
        let n = wp.routed_count();
        routed.push(n);
        if n == 0 {
            values.push(None);
        } else {
            let sum: f64 = wp.paths.iter().flatten().map(|p| p.delay_ms).sum();
            values.push(Some(sum / n as f64));
        }
    }
    MetricSeries {
        name: "mean_delay".into(),
        unit: Unit::DelayMs,
        windows: windows.to_vec(),
        values,
        routed: Some(routed),
        meta: BTreeMap::new(),
    }
}

/// Service connectivity ratio per window; absent when the pair set is
/// empty (the ratio is undefined, not zero).
pub fn eta_series(paths: &[WindowPaths], pair_count: usize, windows: &[TimeWindow]) -> MetricSeries {
    let values = paths
        .iter()
        .map(|wp| {
            (pair_count > 0).then(|| wp.routed_count() as f64 / pair_count as f64 * 100.0)
        })
        .collect();
    MetricSeries {
        name: "eta".into(),
        unit: Unit::Percent,
        windows: windows.to_vec(),
        values,
        routed: Some(paths.iter().map(|wp| wp.routed_count()).collect()),
        meta: BTreeMap::new(),
    }
}

/// The four headline series of a failure impact report, named by view.
pub fn impact_series(report: &ImpactReport, windows: &[TimeWindow]) -> Vec<MetricSeries> {
    let meta: BTreeMap<String, String> = [
        ("t_f".to_string(), format!("{}", report.event.t_f)),
        ("window_f".to_string(), format!("{}", report.window_f)),
        ("failed_count".to_string(), format!("{}", report.event.failed.len())),
    ]
    .into_iter()
    .collect();
    let mk = |name: &str, unit: Unit, values: Vec<Option<f64>>, routed: Option<Vec<usize>>| {
        MetricSeries {
            name: name.into(),
            unit,
            windows: windows.to_vec(),
            values,
            routed,
            meta: meta.clone(),
        }
    };
    vec![
        mk(
            "eta_no_reroute",
            Unit::Percent,
            report.eta_no_reroute.iter().map(|&v| Some(v)).collect(),
            Some(report.routed_no_reroute.clone()),
        ),
        mk(
            "eta_with_reroute",
            Unit::Percent,
            report.eta_with_reroute.iter().map(|&v| Some(v)).collect(),
            Some(report.routed_with_reroute.clone()),
        ),
        mk(
            "mean_delay_no_reroute",
            Unit::DelayMs,
            report.mean_delay_no_reroute.clone(),
            Some(report.routed_no_reroute.clone()),
        ),
        mk(
            "mean_delay_with_reroute",
            Unit::DelayMs,
            report.mean_delay_with_reroute.clone(),
            Some(report.routed_with_reroute.clone()),
        ),
    ]
}

/// Output format of [`write_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::config("format", format!("unknown format '{other}'"))),
        }
    }
}

/// Canonical CSV: `window_index,t_start,t_end,value[,routed_pairs]`, LF
/// endings; absent values are empty fields.
pub fn emit_csv(series: &MetricSeries) -> String {
    let mut s = String::from("window_index,t_start,t_end,value");
    if series.routed.is_some() {
        s.push_str(",routed_pairs");
    }
    s.push('\n');
    for (i, w) in series.windows.iter().enumerate() {
        let value = series.values[i]
            .map(|v| series.format_value(v))
            .unwrap_or_default();
        s.push_str(&format!("{},{:.3},{:.3},{}", w.index, w.t_start, w.t_end, value));
        if let Some(routed) = &series.routed {
            s.push_str(&format!(",{}", routed[i]));
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    window_index: usize,
    t_start: f64,
    t_end: f64,
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    routed_pairs: Option<usize>,
}

#[derive(Serialize)]
struct JsonSeries<'a> {
    name: &'a str,
    unit: Unit,
    meta: &'a BTreeMap<String, String>,
    rows: Vec<JsonRow>,
}

#[derive(Deserialize)]
struct JsonSeriesOwned {
    name: String,
    unit: Unit,
    meta: BTreeMap<String, String>,
    rows: Vec<JsonRow>,
}

/// JSON mirror of the CSV schema.
pub fn emit_json(series: &MetricSeries) -> String {
    let rows = series
        .windows
        .iter()
        .enumerate()
        .map(|(i, w)| JsonRow {
            window_index: w.index,
            t_start: w.t_start,
            t_end: w.t_end,
            value: series.values[i],
            routed_pairs: series.routed.as_ref().map(|r| r[i]),
        })
        .collect();
    let js = JsonSeries {
        name: &series.name,
        unit: series.unit,
        meta: &series.meta,
        rows,
    };
    let mut s = serde_json::to_string_pretty(&js).expect("series serialization cannot fail");
    s.push('\n');
    s
}

/// Parse a series back from its JSON form (inverse of [`emit_json`]).
pub fn parse_json_series(text: &str) -> Result<MetricSeries> {
    let js: JsonSeriesOwned = serde_json::from_str(text)
        .map_err(|e| Error::Schema(format!("series json: {e}")))?;
    let windows = js
        .rows
        .iter()
        .map(|r| TimeWindow {
            index: r.window_index,
            t_start: r.t_start,
            t_end: r.t_end,
        })
        .collect();
    let values = js.rows.iter().map(|r| r.value).collect();
    let routed = if js.rows.iter().all(|r| r.routed_pairs.is_some()) && !js.rows.is_empty() {
        Some(js.rows.iter().map(|r| r.routed_pairs.unwrap()).collect())
    } else {
        None
    };
    Ok(MetricSeries {
        name: js.name,
        unit: js.unit,
        windows,
        values,
        routed,
        meta: js.meta,
    })
}

/// Write each series to `<dir>/<name>.<ext>`; returns the written paths.
pub fn write_series(
    series: &[MetricSeries],
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(series.len());
    for s in series {
        let (ext, body) = match format {
            ReportFormat::Csv => ("csv", emit_csv(s)),
            ReportFormat::Json => ("json", emit_json(s)),
        };
        let path = dir.join(format!("{}.{ext}", s.name));
        let mut file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(body.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
