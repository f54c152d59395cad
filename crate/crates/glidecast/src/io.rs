//! File formats: CSV artifacts, the metrics report, and sidecar metadata.
//!
//! Every float is serialized with [`format_float`], the shortest decimal
//! string that parses back to the identical bits, so written artifacts
//! round-trip exactly and identical runs produce identical bytes. All
//! files are UTF-8 with `\n` line endings. Writers refuse non-finite
//! values outright rather than emitting text that cannot round-trip.
//!
//! Each CSV artifact gets a JSON sidecar next to it (`<name>.meta.json`)
//! carrying the full configuration echo, so any output can be reproduced
//! from the artifact directory alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{Axis, PreparedData};
use crate::error::{Error, Result};
use crate::sim::{TerminationReason, Trajectory, TrajectorySample};
use crate::training::{EpochRecord, EvalReport, MetricSet};

/// Trajectory CSV header.
pub const TRAJECTORY_HEADER: &str = "t,x,y,z";
/// Dataset CSV header.
pub const DATASET_HEADER: &str = "window_index,step,xn,yn,zn,target_axis,target_value";
/// Training history CSV header.
pub const HISTORY_HEADER: &str = "epoch,axis,loss,mae";
/// Merged actual/predicted CSV header.
pub const PLOT_HEADER: &str = "t,x,y,z,x_pred,y_pred,z_pred";

/// Shortest decimal representation that parses back bit-identically.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

fn ensure_finite(context: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "refusing to serialize non-finite value {v} in {context}"
        )))
    }
}

/// Renders trajectory samples as CSV text.
pub fn trajectory_to_csv(samples: &[TrajectorySample]) -> Result<String> {
    let mut out = String::with_capacity(32 * (samples.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in samples {
        for v in [s.t, s.x, s.y, s.z] {
            ensure_finite("trajectory sample", v)?;
        }
        out.push_str(&format_float(s.t));
        out.push(',');
        out.push_str(&format_float(s.x));
        out.push(',');
        out.push_str(&format_float(s.y));
        out.push(',');
        out.push_str(&format_float(s.z));
        out.push('\n');
    }
    Ok(out)
}

/// Writes trajectory samples to a CSV file.
pub fn write_trajectory_csv(samples: &[TrajectorySample], path: &Path) -> Result<()> {
    let text = trajectory_to_csv(samples)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses trajectory CSV text back into a [`Trajectory`].
///
/// The CSV format carries positions only, so the returned trajectory has
/// no kinematic states and its termination reason defaults to the time
/// limit; the simulation sidecar records the actual reason.
pub fn parse_trajectory_csv(text: &str, origin: &Path) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRAJECTORY_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                origin,
                format!("expected header {TRAJECTORY_HEADER:?}, found {header:?}"),
            ))
        }
        None => return Err(Error::parse(origin, "empty file".to_string())),
    }

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            return Err(Error::parse(origin, format!("line {line_no}: empty line")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                origin,
                format!("line {line_no}: expected 4 fields, found {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                Error::parse(origin, format!("line {line_no}: invalid number {field:?}"))
            })?;
            if !slot.is_finite() {
                return Err(Error::parse(
                    origin,
                    format!("line {line_no}: non-finite value {field:?}"),
                ));
            }
        }
        if let Some(prev) = samples.last() {
            let prev: &TrajectorySample = prev;
            if values[0] <= prev.t {
                return Err(Error::parse(
                    origin,
                    format!(
                        "line {line_no}: time {} does not increase past {}",
                        values[0], prev.t
                    ),
                ));
            }
        }
        samples.push(TrajectorySample {
            t: values[0],
            x: values[1],
            y: values[2],
            z: values[3],
        });
    }
    Ok(Trajectory {
        samples,
        states: Vec::new(),
        termination: TerminationReason::TimeLimit,
    })
}

/// Reads a trajectory CSV file.
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory_csv(&text, path)
}

/// Renders a prepared dataset as inspection CSV.
///
/// Windows appear in chronological order (training split first, then
/// test). Each window contributes its `L` normalized rows followed by
/// three target rows at step `L`, one per axis; inapplicable columns are
/// left empty.
pub fn dataset_to_csv(data: &PreparedData) -> Result<String> {
    let l = data.train.sequence_length;
    let mut out = String::new();
    out.push_str(DATASET_HEADER);
    out.push('\n');
    let mut window_index = 0usize;
    for split in [&data.train, &data.test] {
        for (i, window) in split.inputs.iter().enumerate() {
            for step in 0..l {
                let (xn, yn, zn) = (
                    window.at2(step, 0),
                    window.at2(step, 1),
                    window.at2(step, 2),
                );
                for v in [xn, yn, zn] {
                    ensure_finite("dataset window", v)?;
                }
                out.push_str(&format!(
                    "{window_index},{step},{},{},{},,\n",
                    format_float(xn),
                    format_float(yn),
                    format_float(zn)
                ));
            }
            for axis in Axis::ALL {
                let target = split.targets[axis.index()][i];
                ensure_finite("dataset target", target)?;
                out.push_str(&format!(
                    "{window_index},{l},,,,{},{}\n",
                    axis.label(),
                    format_float(target)
                ));
            }
            window_index += 1;
        }
    }
    Ok(out)
}

/// Writes the dataset inspection CSV.
pub fn write_dataset_csv(data: &PreparedData, path: &Path) -> Result<()> {
    let text = dataset_to_csv(data)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Renders training history as CSV.
pub fn history_to_csv(records: &[EpochRecord]) -> Result<String> {
    let mut out = String::new();
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for r in records {
        ensure_finite("history loss", r.loss)?;
        ensure_finite("history mae", r.mae)?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch,
            r.axis.label(),
            format_float(r.loss),
            format_float(r.mae)
        ));
    }
    Ok(out)
}

/// Writes the training history CSV.
pub fn write_history_csv(records: &[EpochRecord], path: &Path) -> Result<()> {
    let text = history_to_csv(records)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One aligned actual/predicted row of the plotting export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    /// Sample time (s).
    pub t: f64,
    /// Actual position (m).
    pub x: f64,
    /// Actual position (m).
    pub y: f64,
    /// Actual position (m).
    pub z: f64,
    /// One-step prediction for the same time (m).
    pub x_pred: f64,
    /// One-step prediction for the same time (m).
    pub y_pred: f64,
    /// One-step prediction for the same time (m).
    pub z_pred: f64,
}

/// Renders aligned actual/predicted rows as CSV.
pub fn plot_to_csv(rows: &[PlotRow]) -> Result<String> {
    let mut out = String::new();
    out.push_str(PLOT_HEADER);
    out.push('\n');
    for r in rows {
        for v in [r.t, r.x, r.y, r.z, r.x_pred, r.y_pred, r.z_pred] {
            ensure_finite("plot row", v)?;
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_float(r.t),
            format_float(r.x),
            format_float(r.y),
            format_float(r.z),
            format_float(r.x_pred),
            format_float(r.y_pred),
            format_float(r.z_pred)
        ));
    }
    Ok(out)
}

/// Writes the plotting CSV.
pub fn write_plot_csv(rows: &[PlotRow], path: &Path) -> Result<()> {
    let text = plot_to_csv(rows)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// The metrics report file: pooled metrics at the top level, a per-axis
/// breakdown, and the exact configuration that produced the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsFile {
    /// Pooled root mean squared error (m).
    pub rmse: f64,
    /// Pooled mean absolute error (m).
    pub mae: f64,
    /// Pooled mean absolute percentage error.
    pub mape_percent: f64,
    /// Pooled count of targets excluded from MAPE.
    pub mape_excluded_count: usize,
    /// Per-axis metrics keyed by axis label.
    pub per_axis: BTreeMap<String, MetricSet>,
    /// Configuration echo sufficient to reproduce this report.
    pub config_echo: RunConfig,
}

/// Assembles the report file content from an evaluation and its config.
pub fn metrics_file(report: &EvalReport, config: &RunConfig) -> MetricsFile {
    MetricsFile {
        rmse: report.pooled.rmse,
        mae: report.pooled.mae,
        mape_percent: report.pooled.mape_percent,
        mape_excluded_count: report.pooled.mape_excluded_count,
        per_axis: report.per_axis.clone(),
        config_echo: config.clone(),
    }
}

/// Writes the metrics report as pretty-printed JSON.
pub fn write_metrics_json(report: &EvalReport, config: &RunConfig, path: &Path) -> Result<()> {
    let file = metrics_file(report, config);
    for (context, v) in [
        ("metrics rmse", file.rmse),
        ("metrics mae", file.mae),
        ("metrics mape_percent", file.mape_percent),
    ] {
        ensure_finite(context, v)?;
    }
    let mut text =
        serde_json::to_string_pretty(&file).map_err(|e| Error::Corrupt(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a metrics report back.
pub fn read_metrics_json(path: &Path) -> Result<MetricsFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Sidecar metadata written next to every CSV artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    /// Subcommand that produced the artifact.
    pub command: String,
    /// Why the simulation stopped (simulation artifacts only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationReason>,
    /// Recorded sample count (simulation artifacts only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Configuration echo sufficient to reproduce the artifact.
    pub config_echo: RunConfig,
}

/// Sidecar path for an artifact: `<artifact>.meta.json`.
pub fn meta_path(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".meta.json");
    artifact.with_file_name(name)
}

/// Writes a sidecar metadata file.
pub fn write_meta(meta: &RunMeta, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(meta).map_err(|e| Error::Corrupt(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a sidecar metadata file back.
pub fn read_meta(path: &Path) -> Result<RunMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}
