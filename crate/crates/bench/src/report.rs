//! Report files: `results.csv` (one row per grid cell, fixed column order),
//! `ranks.json`, and the SVG plots. All output is byte-stable under a fixed
//! seed: row order is (dataset order x config order), JSON maps are sorted,
//! and floats print with shortest-roundtrip formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ranks::RankSummary;
use crate::runner::{CellMetrics, CellOutcome, Metric, ResultsTable};
use crate::svg;

pub const RESULTS_HEADER: &str = "series_id,method,rmse,miscal_area,rmsce,ence,status";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io on {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("malformed results csv: {0}")]
    Malformed(String),
}

fn io_err(path: &Path, e: impl ToString) -> ReportError {
    ReportError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// CSV field content: failure reasons may carry arbitrary payloads, so
/// control characters and commas are flattened.
fn sanitize(reason: &str) -> String {
    reason
        .chars()
        .map(|c| if c == ',' || c.is_control() { ' ' } else { c })
        .collect()
}

pub fn write_results_csv(table: &ResultsTable, path: &Path) -> Result<(), ReportError> {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for sid in &table.series_ids {
        for method in &table.methods {
            let cell = table
                .cell(sid, method)
                .ok_or_else(|| ReportError::Malformed(format!("missing cell {sid}/{method}")))?;
            match cell {
                CellOutcome::Ok { metrics, .. } => {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},ok\n",
                        sid, method, metrics.rmse, metrics.miscal_area, metrics.rmsce, metrics.ence
                    ));
                }
                CellOutcome::Failed { reason } => {
                    out.push_str(&format!(
                        "{},{},,,,,failed: {}\n",
                        sid,
                        method,
                        sanitize(reason)
                    ));
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Rebuild a metrics-only table from `results.csv` (curves are not stored,
/// so calibration plots cannot be regenerated from it).
pub fn read_results_csv(path: &Path) -> Result<ResultsTable, ReportError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ReportError::Malformed("empty file".into()))?;
    if header != RESULTS_HEADER {
        return Err(ReportError::Malformed(format!(
            "unexpected header `{header}`"
        )));
    }
    let mut series_ids: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    let mut cells = std::collections::BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(7, ',').collect();
        if fields.len() != 7 {
            return Err(ReportError::Malformed(format!(
                "line {}: expected 7 fields",
                lineno + 2
            )));
        }
        let (sid, method, status) = (fields[0].to_string(), fields[1].to_string(), fields[6]);
        if !series_ids.contains(&sid) {
            series_ids.push(sid.clone());
        }
        if !methods.contains(&method) {
            methods.push(method.clone());
        }
        let outcome = if status == "ok" {
            let parse = |i: usize| -> Result<f64, ReportError> {
                fields[i].parse().map_err(|_| {
                    ReportError::Malformed(format!(
                        "line {}: bad number `{}`",
                        lineno + 2,
                        fields[i]
                    ))
                })
            };
            let metrics = CellMetrics {
                rmse: parse(2)?,
                miscal_area: parse(3)?,
                rmsce: parse(4)?,
                ence: parse(5)?,
            };
            CellOutcome::Ok {
                metrics,
                report: bamoes::calibration::CalibrationReport {
                    quantile_levels: Vec::new(),
                    observed_coverage: Vec::new(),
                    miscal_area: metrics.miscal_area,
                    rmsce: metrics.rmsce,
                    ence: metrics.ence,
                    rmse: metrics.rmse,
                },
            }
        } else {
            CellOutcome::Failed {
                reason: status.to_string(),
            }
        };
        cells.insert((sid, method), outcome);
    }
    Ok(ResultsTable {
        series_ids,
        methods,
        cells,
    })
}

pub fn write_ranks_json(summary: &RankSummary, path: &Path) -> Result<(), ReportError> {
    let json =
        serde_json::to_string_pretty(summary).map_err(|e| ReportError::Malformed(e.to_string()))?;
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(json.as_bytes())
        .map_err(|e| io_err(path, e))?;
    file.write_all(b"\n").map_err(|e| io_err(path, e))
}

/// Emit the full report set into `outdir`: `results.csv`, `ranks.json`,
/// one calibration SVG per successful cell, and one critical-difference SVG
/// per metric. Returns the created file paths in a fixed order.
pub fn emit_reports(
    table: &ResultsTable,
    summary: &RankSummary,
    outdir: &Path,
    alphas: &[f64],
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(outdir).map_err(|e| io_err(outdir, e))?;
    let mut written = Vec::new();

    let results = outdir.join("results.csv");
    write_results_csv(table, &results)?;
    written.push(results);

    let ranks = outdir.join("ranks.json");
    write_ranks_json(summary, &ranks)?;
    written.push(ranks);

    for sid in &table.series_ids {
        for method in &table.methods {
            if let Some(CellOutcome::Ok { report, .. }) = table.cell(sid, method) {
                if report.quantile_levels.is_empty() {
                    continue; // metrics-only table (reloaded from csv)
                }
                let path = outdir.join(format!("calibration_{sid}_{method}.svg"));
                fs::write(&path, svg::calibration_svg(report, sid, method, alphas))
                    .map_err(|e| io_err(&path, e))?;
                written.push(path);
            }
        }
    }

    for metric in Metric::ALL {
        let ms = &summary.metrics[metric.name()];
        if ms.series_used == 0 {
            continue;
        }
        let path = outdir.join(format!("cd_{}.svg", metric.name()));
        fs::write(&path, svg::cd_svg(metric.name(), ms, summary.alpha))
            .map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
