//! CSV, SVG and metadata artifacts.

use crate::config::ExperimentKind;
use crate::error::{HarnessError, Result};
use crate::experiments::{
    ExperimentResult, MetricKind, SeedRun, SettingRuns, SettingSummary, VariantRuns,
};
use crate::metrics::normalize_aucs;
use crate::svg::line_plot;
use serde_json::json;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

const CURVES_SUFFIX: &str = "_curves.csv";

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_curves(setting: &SettingRuns, path: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for v in &setting.variants {
        for run in &v.runs {
            for (i, x) in run.curve.iter().enumerate() {
                let mut row = vec![
                    run.seed.to_string(),
                    (i + 1).to_string(),
                    v.name.clone(),
                    x.to_string(),
                ];
                if setting.metric == MetricKind::Steps {
                    row.push(run.returns[i].to_string());
                }
                rows.push(row);
            }
        }
    }
    let header: &[&str] = match setting.metric {
        MetricKind::Rmsve => &["seed", "step", "variant", "rmsve"],
        MetricKind::Steps => &["seed", "episode", "variant", "steps", "return"],
    };
    write_rows(path, header, rows)
}

pub fn write_summary(summary: &SettingSummary, path: &Path) -> Result<()> {
    let rows = summary.rows.iter().map(|r| {
        vec![
            r.variant.clone(),
            r.auc_normalized.to_string(),
            r.final_mean.to_string(),
            r.final_stderr.to_string(),
        ]
    });
    write_rows(
        path,
        &["variant", "auc_normalized", "final_mean", "final_stderr"],
        rows,
    )
}

fn write_plot(setting: &SettingRuns, summary: &SettingSummary, path: &Path) -> Result<()> {
    let series: Vec<(&str, _)> = summary
        .rows
        .iter()
        .zip(&summary.stats)
        .map(|(r, s)| (r.variant.as_str(), s))
        .collect();
    let y_label = match setting.metric {
        MetricKind::Rmsve => "RMSVE",
        MetricKind::Steps => "steps to goal",
    };
    write_text(path, &line_plot(&setting.label, y_label, &series))
}

/// Summary, CSV and SVG files of one setting.
fn write_setting(setting: &SettingRuns, out: &Path) -> Result<SettingSummary> {
    let summary = setting.summarize()?;
    write_summary(
        &summary,
        &out.join(format!("{}_summary.csv", setting.label)),
    )?;
    write_plot(
        setting,
        &summary,
        &out.join(format!("{}.svg", setting.label)),
    )?;
    Ok(summary)
}

/// Raw and normalized AUC of every (setting, variant) pair, normalized over
/// the whole sweep.
pub fn write_sweep(summaries: &[SettingSummary], path: &Path) -> Result<()> {
    let pairs: Vec<(&str, &str, f64)> = summaries
        .iter()
        .flat_map(|s| {
            s.rows
                .iter()
                .map(move |r| (s.label.as_str(), r.variant.as_str(), r.auc))
        })
        .collect();
    let normalized = normalize_aucs(&pairs.iter().map(|p| p.2).collect::<Vec<_>>());
    let rows = pairs
        .iter()
        .zip(&normalized)
        .map(|(&(s, v, a), n)| vec![s.to_string(), v.to_string(), a.to_string(), n.to_string()]);
    write_rows(path, &["setting", "variant", "auc", "auc_normalized"], rows)
}

/// Writes every artifact of `result` into `out` and returns the summaries.
pub fn write_experiment(result: &ExperimentResult, out: &Path) -> Result<Vec<SettingSummary>> {
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut summaries = Vec::new();
    for setting in &result.settings {
        write_curves(
            setting,
            &out.join(format!("{}{CURVES_SUFFIX}", setting.label)),
        )?;
        summaries.push(write_setting(setting, out)?);
    }
    if result.config.kind == ExperimentKind::SweepFanRatio {
        write_sweep(&summaries, &out.join("sweep.csv"))?;
    }
    write_text(&out.join("config.json"), &result.config.to_json())?;
    let runs: Vec<_> = result
        .settings
        .iter()
        .flat_map(|s| {
            s.variants.iter().flat_map(move |v| {
                v.runs.iter().map(move |r| {
                    json!({
                        "setting": s.label,
                        "variant": v.name,
                        "seed": r.seed,
                        "wall_time_s": r.wall_time,
                        "first_optimal_episode": r.first_optimal_episode,
                        "final_greedy_path": r.final_greedy_path,
                    })
                })
            })
        })
        .collect();
    let meta = json!({
        "kind": result.config.kind,
        "config_hash": result.config_hash,
        "wall_time_s": result.wall_time,
        "runs": runs,
    });
    write_text(
        &out.join("metadata.json"),
        &serde_json::to_string_pretty(&meta).expect("metadata serializes"),
    )?;
    Ok(summaries)
}

/// Reads one curves file back into per-variant runs.
pub fn read_curves(path: &Path) -> Result<SettingRuns> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let metric = match header.iter().collect::<Vec<_>>().as_slice() {
        ["seed", "step", "variant", "rmsve"] => MetricKind::Rmsve,
        ["seed", "episode", "variant", "steps", "return"] => MetricKind::Steps,
        _ => {
            return Err(HarnessError::Config(format!(
                "{}: unrecognised header {:?}",
                path.display(),
                header
            )))
        }
    };
    let bad = |what: &str| HarnessError::Config(format!("{}: bad {what}", path.display()));
    // Variant and seed order follow first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut seeds: BTreeMap<String, Vec<SeedRun>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let seed: u64 = record[0].parse().map_err(|_| bad("seed"))?;
        let name = record[2].to_string();
        let value: f64 = record[3].parse().map_err(|_| bad("value"))?;
        if !seeds.contains_key(&name) {
            order.push(name.clone());
        }
        let runs = seeds.entry(name).or_default();
        if runs.last().is_none_or(|r| r.seed != seed) {
            runs.push(SeedRun {
                seed,
                curve: Vec::new(),
                returns: Vec::new(),
                first_optimal_episode: None,
                final_greedy_path: None,
                wall_time: 0.0,
            });
        }
        let run = runs.last_mut().expect("pushed above");
        run.curve.push(value);
        if metric == MetricKind::Steps {
            run.returns
                .push(record[4].parse().map_err(|_| bad("return"))?);
        }
    }
    let label = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_suffix(CURVES_SUFFIX))
        .ok_or_else(|| bad("file name"))?
        .to_string();
    Ok(SettingRuns {
        label,
        metric,
        optimal_path: None,
        variants: order
            .into_iter()
            .map(|name| {
                let runs = seeds.remove(&name).unwrap_or_default();
                VariantRuns { name, runs }
            })
            .collect(),
    })
}

/// Regenerates summaries and plots from the curves files found in `dir`.
pub fn analyze(dir: &Path) -> Result<Vec<SettingSummary>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(CURVES_SUFFIX))
        })
        .collect();
    if files.is_empty() {
        return Err(HarnessError::Config(format!(
            "no curves files in {}",
            dir.display()
        )));
    }
    files.sort();
    files
        .iter()
        .map(|f| read_curves(f).and_then(|setting| write_setting(&setting, dir)))
        .collect()
}
