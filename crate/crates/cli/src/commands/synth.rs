//! `sabench synth` — generate a synthetic panel CSV and its ground truth.

use std::path::Path;

use anyhow::Context;
use sabench_core::{synth_generate, write_panel_csv};

use crate::config::RunConfig;
use crate::fsutil::atomic_write;

pub fn cmd_synth(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let synth = config.synth_config()?;
    let (panel, truth) = synth_generate(&synth).context("synthetic generation failed")?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let panel_path = out.join("panel.csv");
    let truth_path = out.join("ground_truth.json");

    // write_panel_csv goes through a string; route it via atomic_write.
    let tmp = tempfile::tempdir_in(out)?;
    let staged = tmp.path().join("panel.csv");
    write_panel_csv(&panel, &staged)?;
    let bytes = std::fs::read(&staged)?;
    atomic_write(&panel_path, &bytes)?;
    atomic_write(&truth_path, truth.to_json()?.as_bytes())?;

    println!(
        "wrote {} ({} entities x {} days x {} features) and {}",
        panel_path.display(),
        panel.num_entities(),
        panel.num_times(),
        panel.k(),
        truth_path.display()
    );
    Ok(())
}
