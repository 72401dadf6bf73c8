//! Subcommand implementations.

pub mod report;
pub mod run;
pub mod serve;
pub mod synth;
pub mod train;

use anyhow::Context;
use sabench_core::{load_panel, synth_generate, GroundTruthRanking, Panel};

use crate::config::{DatasetConfig, RunConfig};

/// Materializes the configured dataset. Synthetic datasets also yield their
/// planted ground-truth ranking.
pub(crate) fn load_dataset(
    config: &RunConfig,
) -> anyhow::Result<(Panel, Option<GroundTruthRanking>)> {
    match &config.dataset {
        DatasetConfig::Synth { .. } => {
            let synth = config.synth_config()?;
            let (panel, truth) = synth_generate(&synth).context("synthetic generation failed")?;
            Ok((panel, Some(truth)))
        }
        DatasetConfig::Csv { .. } => {
            let (path, schema) = config.csv_schema()?;
            let panel = load_panel(&path, &schema)
                .with_context(|| format!("cannot load panel from {}", path.display()))?;
            Ok((panel, None))
        }
    }
}
