//! Multi-seed summaries of a results table.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::plot::{line_chart, Series};
use crate::results::{read_results, ResultRow};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub acquisition: String,
    pub model: String,
    pub batch_size: usize,
    pub cycle: usize,
    pub n_acquired: usize,
    pub n_seeds: usize,
    pub test_mse_mean: f64,
    pub test_mse_std: f64,
    pub hit_ratio_mean: f64,
    pub hit_ratio_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryEntry> {
    let mut groups: BTreeMap<(&str, &str, usize, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((&r.acquisition, &r.model, r.batch_size, r.cycle))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((acquisition, model, batch_size, cycle), rs)| {
            let mse: Vec<f64> = rs.iter().map(|r| r.test_mse).collect();
            let hit: Vec<f64> = rs.iter().map(|r| r.hit_ratio).collect();
            let (test_mse_mean, test_mse_std) = mean_std(&mse);
            let (hit_ratio_mean, hit_ratio_std) = mean_std(&hit);
            let n_acquired = rs.iter().map(|r| r.n_acquired).min().unwrap_or(0);
            if rs.iter().any(|r| r.n_acquired != n_acquired) {
                log::warn!("{acquisition}/{model}/b{batch_size} cycle {cycle}: seeds acquired different totals");
            }
            SummaryEntry {
                acquisition: acquisition.to_string(),
                model: model.to_string(),
                batch_size,
                cycle,
                n_acquired,
                n_seeds: rs.len(),
                test_mse_mean,
                test_mse_std,
                hit_ratio_mean,
                hit_ratio_std,
            }
        })
        .collect()
}

/// One chart per (metric, model, batch size); one series per acquisition.
fn write_plots(summary: &[SummaryEntry], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut panels: BTreeMap<(&str, usize), BTreeMap<&str, Vec<&SummaryEntry>>> = BTreeMap::new();
    for e in summary {
        panels
            .entry((&e.model, e.batch_size))
            .or_default()
            .entry(&e.acquisition)
            .or_default()
            .push(e);
    }
    let metrics: [(&str, &str, fn(&SummaryEntry) -> (f64, f64)); 2] = [
        ("test_mse", "test MSE", |e| (e.test_mse_mean, e.test_mse_std)),
        ("hit_ratio", "hit ratio", |e| (e.hit_ratio_mean, e.hit_ratio_std)),
    ];
    let mut written = Vec::new();
    for ((model, b), by_acq) in &panels {
        for (key, label, get) in &metrics {
            let series: Vec<Series> = by_acq
                .iter()
                .map(|(acq, es)| Series {
                    name: acq.to_string(),
                    points: es
                        .iter()
                        .map(|e| {
                            let (m, s) = get(e);
                            (e.n_acquired as f64, m, s)
                        })
                        .collect(),
                })
                .collect();
            let title = format!("{label}, {model}, batch size {b}");
            let svg = line_chart(&title, "acquired units", label, &series);
            let path = dir.join(format!("{key}_{model}_b{b}.svg"));
            fs::write(&path, svg).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// `disco report`: write `summary.json` (and optionally SVG charts) into
/// `out_dir`, defaulting to the directory of the results file.
pub fn cmd_report(results: &Path, plots: bool, out_dir: Option<&Path>) -> Result<ReportOutcome> {
    let rows = read_results(results)?;
    let summary = summarize(&rows);
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| results.parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let plots = if plots {
        write_plots(&summary, &dir)?
    } else {
        Vec::new()
    };
    Ok(ReportOutcome { summary: path, plots })
}
