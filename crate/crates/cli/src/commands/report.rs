//! `sabench report` — summarize a run directory into agreement matrices and
//! an accuracy table.
//!
//! Emits, as CSV and JSON under `matrices/`:
//! - one cross-method matrix per model (do the methods agree?),
//! - one cross-model matrix per method (is the method robust to the model?),
//! - a Spearman-vs-ground-truth accuracy table when a truth file is given
//!   (or was produced by a synthetic run).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use sabench_core::{accuracy, agreement_matrix, GroundTruthRanking, SensitivityReport};

use crate::fsutil::atomic_write;

/// One report plus the cell identity recovered from its filename
/// (`reports/<model>.<method-label>.json`).
struct Cell {
    model: String,
    label: String,
    report: SensitivityReport,
}

fn scan_reports(run_dir: &Path) -> anyhow::Result<Vec<Cell>> {
    let reports_dir = run_dir.join("reports");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&reports_dir)
        .with_context(|| format!("cannot read {}", reports_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();

    let mut cells = Vec::new();
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let Some((model, label)) = stem.split_once('.') else {
            bail!(
                "report file {} does not follow <model>.<method>.json",
                path.display()
            );
        };
        let report = SensitivityReport::load(&path)
            .map_err(|e| anyhow::anyhow!("cannot parse report {}: {e}", path.display()))?;
        cells.push(Cell {
            model: model.to_string(),
            label: label.to_string(),
            report,
        });
    }
    Ok(cells)
}

#[derive(Serialize)]
struct AccuracyRow {
    model: String,
    method: String,
    spearman: f64,
}

pub fn cmd_report(
    run_dir: &Path,
    truth_path: Option<&Path>,
    invert_truth: bool,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let cells = scan_reports(run_dir)?;
    if cells.len() < 2 {
        bail!(
            "run directory {} holds {} report(s); need at least 2 to compare",
            run_dir.display(),
            cells.len()
        );
    }
    let out_dir = out.unwrap_or(run_dir).join("matrices");
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let mut emitted = 0;

    // Cross-method agreement, one matrix per model.
    let mut by_model: BTreeMap<&str, Vec<&Cell>> = BTreeMap::new();
    for cell in &cells {
        by_model.entry(&cell.model).or_default().push(cell);
    }
    for (model, group) in &by_model {
        if group.len() < 2 {
            println!("model {model}: only one report, skipping cross-method matrix");
            continue;
        }
        let reports: Vec<SensitivityReport> =
            group.iter().map(|c| c.report.clone()).collect();
        let mut matrix = agreement_matrix(&reports)
            .map_err(|e| anyhow::anyhow!("cross-method matrix for model {model}: {e}"))?;
        matrix.labels = group
            .iter()
            .map(|c| (c.model.clone(), c.label.clone()))
            .collect();
        write_matrix(&out_dir, &format!("cross_method.{model}"), &matrix)?;
        emitted += 1;
    }

    // Cross-model robustness, one matrix per method label.
    let mut by_method: BTreeMap<&str, Vec<&Cell>> = BTreeMap::new();
    for cell in &cells {
        by_method.entry(&cell.label).or_default().push(cell);
    }
    for (label, group) in &by_method {
        if group.len() < 2 {
            println!("method {label}: only one report, skipping cross-model matrix");
            continue;
        }
        let reports: Vec<SensitivityReport> =
            group.iter().map(|c| c.report.clone()).collect();
        let mut matrix = agreement_matrix(&reports)
            .map_err(|e| anyhow::anyhow!("cross-model matrix for method {label}: {e}"))?;
        matrix.labels = group
            .iter()
            .map(|c| (c.model.clone(), c.label.clone()))
            .collect();
        write_matrix(&out_dir, &format!("cross_model.{label}"), &matrix)?;
        emitted += 1;
    }

    // Accuracy against ground truth.
    let implicit = run_dir.join("ground_truth.json");
    let truth = match truth_path {
        Some(path) => Some(GroundTruthRanking::load(path, invert_truth)?),
        None if implicit.exists() => {
            println!("using ground truth from {}", implicit.display());
            Some(GroundTruthRanking::load(&implicit, invert_truth)?)
        }
        None => None,
    };
    if let Some(truth) = truth {
        let mut rows = Vec::new();
        for cell in &cells {
            let rho = accuracy(&cell.report, &truth).map_err(|e| {
                anyhow::anyhow!("accuracy for ({}, {}): {e}", cell.model, cell.label)
            })?;
            rows.push(AccuracyRow {
                model: cell.model.clone(),
                method: cell.label.clone(),
                spearman: rho,
            });
        }
        let mut csv = String::from("model,method,spearman\n");
        for row in &rows {
            csv.push_str(&format!("{},{},{}\n", row.model, row.method, row.spearman));
        }
        atomic_write(&out_dir.join("accuracy.csv"), csv.as_bytes())?;
        atomic_write(
            &out_dir.join("accuracy.json"),
            serde_json::to_string_pretty(&rows)?.as_bytes(),
        )?;
        emitted += 1;
    }

    if emitted == 0 {
        bail!("no comparable report groups found in {}", run_dir.display());
    }
    println!("wrote {emitted} table(s) under {}", out_dir.display());
    Ok(())
}

fn write_matrix(
    out_dir: &Path,
    stem: &str,
    matrix: &sabench_core::CorrelationMatrix,
) -> anyhow::Result<()> {
    atomic_write(&out_dir.join(format!("{stem}.csv")), matrix.to_csv().as_bytes())?;
    atomic_write(
        &out_dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(matrix)?.as_bytes(),
    )?;
    Ok(())
}
