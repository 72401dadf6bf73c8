//! `sabench run` — execute the full (model x method) benchmark grid.
//!
//! Models are built (trained or connected) up front, single-threaded for
//! reproducibility; grid cells then run in parallel up to --jobs. Every cell
//! writes its report atomically and failures are recorded per cell without
//! aborting siblings. Cells sharing one external adapter serialize on its
//! channel.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::Context;
use rayon::prelude::*;
use sabench_core::{
    ablation, make_windows, morris, occlusion, scaled_morris, train, training_mse,
    BaselineScope, ExternalModel, FeatureStats, ForecastModel, ModelSpec, SensitivityReport,
    WindowSet, DEFAULT_ADAPTER_TIMEOUT,
};

use crate::config::{MethodEntry, MethodKind, ModelEntry, ModelKind, RunConfig};
use crate::fsutil::atomic_write;
use crate::manifest::{CellRecord, CellStatus, DatasetSummary, Manifest, ModelRecord};

use super::load_dataset;

pub struct RunOutcome {
    pub failed_cells: usize,
}

fn build_model(
    entry: &ModelEntry,
    config: &RunConfig,
    windows: &WindowSet,
) -> sabench_core::Result<ForecastModel> {
    match entry.kind {
        ModelKind::External => {
            let command = entry.command.clone().unwrap_or_default();
            let spec = ModelSpec {
                lookback: config.lookback,
                horizon: config.horizon,
                k: windows.k(),
            };
            let timeout = entry
                .timeout_secs
                .map(Duration::from_secs)
                .unwrap_or(DEFAULT_ADAPTER_TIMEOUT);
            Ok(ForecastModel::External(ExternalModel::connect(
                &command, spec, timeout,
            )?))
        }
        _ => {
            let kind = entry.builtin_kind().expect("built-in kind");
            train(kind, windows, &entry.train_config(config.seed))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    model: &ForecastModel,
    model_name: &str,
    method: &MethodEntry,
    windows: &WindowSet,
    stats: &FeatureStats,
    output_scale: f64,
    global_seed: u64,
) -> sabench_core::Result<SensitivityReport> {
    match method.kind {
        MethodKind::Morris => morris(
            model,
            model_name,
            windows,
            stats,
            &method.morris_config(global_seed),
        ),
        MethodKind::ScaledMorris => {
            let raw = morris(
                model,
                model_name,
                windows,
                stats,
                &method.morris_config(global_seed),
            )?;
            scaled_morris(&raw, stats, output_scale)
        }
        MethodKind::Ablation => ablation(
            model,
            model_name,
            windows,
            stats,
            &method.baseline_policy(BaselineScope::WholeWindow),
        ),
        MethodKind::Occlusion => occlusion(
            model,
            model_name,
            windows,
            stats,
            &method.occlusion_config(),
        ),
    }
}

pub fn cmd_run(config: &RunConfig, out: &Path, jobs: usize) -> anyhow::Result<RunOutcome> {
    let reports_dir = out.join("reports");
    std::fs::create_dir_all(&reports_dir)
        .with_context(|| format!("cannot create {}", reports_dir.display()))?;

    let (panel, truth) = load_dataset(config)?;
    if let Some(truth) = &truth {
        atomic_write(&out.join("ground_truth.json"), truth.to_json()?.as_bytes())?;
    }
    let windows = make_windows(&panel, config.lookback, config.horizon)?;
    let stats = panel.feature_stats();
    let output_scale = windows.target_std();

    // Model construction is sequential: training determinism is independent
    // of --jobs and each adapter process spawns exactly once.
    let mut model_records = Vec::new();
    let mut models: Vec<Option<Arc<ForecastModel>>> = Vec::new();
    let mut model_errors: Vec<Option<String>> = Vec::new();
    for entry in &config.models {
        let t0 = Instant::now();
        match build_model(entry, config, &windows) {
            Ok(model) => {
                let mse = match entry.kind {
                    ModelKind::External => None,
                    _ => Some(training_mse(&model, &windows)?),
                };
                model_records.push(ModelRecord {
                    name: entry.name.clone(),
                    kind: format!("{:?}", entry.kind),
                    status: CellStatus::Ok,
                    error: None,
                    duration_ms: t0.elapsed().as_millis() as u64,
                    train_mse: mse,
                });
                models.push(Some(Arc::new(model)));
                model_errors.push(None);
            }
            Err(e) => {
                let msg = e.to_string();
                model_records.push(ModelRecord {
                    name: entry.name.clone(),
                    kind: format!("{:?}", entry.kind),
                    status: CellStatus::Failed,
                    error: Some(msg.clone()),
                    duration_ms: t0.elapsed().as_millis() as u64,
                    train_mse: None,
                });
                models.push(None);
                model_errors.push(Some(msg));
            }
        }
    }

    let cells: Vec<(usize, usize)> = (0..config.models.len())
        .flat_map(|mi| (0..config.methods.len()).map(move |hi| (mi, hi)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot build worker pool")?;
    let records: Vec<CellRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(mi, hi)| {
                let model_entry = &config.models[mi];
                let method_entry = &config.methods[hi];
                let label = method_entry.label();
                let t0 = Instant::now();
                let result = match &models[mi] {
                    Some(model) => run_cell(
                        model,
                        &model_entry.name,
                        method_entry,
                        &windows,
                        &stats,
                        output_scale,
                        config.seed,
                    )
                    .and_then(|report| {
                        let rel = format!("reports/{}.{}.json", model_entry.name, label);
                        atomic_write(&out.join(&rel), report.to_json()?.as_bytes())
                            .map_err(|e| sabench_core::Error::Report(e.to_string()))?;
                        Ok(rel)
                    }),
                    None => Err(sabench_core::Error::Report(format!(
                        "model unavailable: {}",
                        model_errors[mi].as_deref().unwrap_or("unknown failure")
                    ))),
                };
                match result {
                    Ok(rel) => CellRecord {
                        model: model_entry.name.clone(),
                        method: label,
                        status: CellStatus::Ok,
                        error: None,
                        duration_ms: t0.elapsed().as_millis() as u64,
                        report: Some(rel),
                    },
                    Err(e) => CellRecord {
                        model: model_entry.name.clone(),
                        method: label,
                        status: CellStatus::Failed,
                        error: Some(e.to_string()),
                        duration_ms: t0.elapsed().as_millis() as u64,
                        report: None,
                    },
                }
            })
            .collect()
    });

    let manifest = Manifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        created_at: chrono::Utc::now().to_rfc3339(),
        seed: config.seed,
        jobs,
        config_hash: config.hash(),
        dataset: DatasetSummary {
            entities: panel.num_entities(),
            days: panel.num_times(),
            k: panel.k(),
            windows: windows.len(),
        },
        models: model_records,
        cells: records,
        config: config.clone(),
    };
    atomic_write(
        &out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    let failed = manifest.failed_cells();
    for cell in &manifest.cells {
        match cell.status {
            CellStatus::Ok => println!("ok     {}.{} ({} ms)", cell.model, cell.method, cell.duration_ms),
            CellStatus::Failed => println!(
                "failed {}.{}: {}",
                cell.model,
                cell.method,
                cell.error.as_deref().unwrap_or("unknown")
            ),
        }
    }
    println!(
        "{} of {} cells succeeded; manifest at {}",
        manifest.cells.len() - failed,
        manifest.cells.len(),
        out.join("manifest.json").display()
    );
    Ok(RunOutcome {
        failed_cells: failed,
    })
}
