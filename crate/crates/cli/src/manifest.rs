//! Run manifest: configuration echo, config hash, and per-cell outcomes.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// Outcome of one (model, method) grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub model: String,
    pub method: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub duration_ms: u64,
    /// Report path relative to the run directory, present when status is ok.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

/// Outcome of building one model (training or adapter handshake).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub kind: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub duration_ms: u64,
    /// Training MSE over the run's windows (built-in models only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_mse: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub entities: usize,
    pub days: usize,
    pub k: usize,
    pub windows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub engine_version: String,
    /// RFC 3339 creation time. Excluded from determinism comparisons.
    pub created_at: String,
    pub seed: u64,
    pub jobs: usize,
    pub config_hash: String,
    pub dataset: DatasetSummary,
    pub models: Vec<ModelRecord>,
    pub cells: Vec<CellRecord>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn failed_cells(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.status == CellStatus::Failed)
            .count()
    }
}
