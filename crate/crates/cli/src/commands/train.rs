//! `sabench train` — train the built-in models of a config and save them.

use std::path::Path;

use anyhow::Context;
use sabench_core::{make_windows, train, training_mse, SavedModel};

use crate::config::RunConfig;
use crate::fsutil::atomic_write;

use super::load_dataset;

pub fn cmd_train(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let (panel, _) = load_dataset(config)?;
    let windows = make_windows(&panel, config.lookback, config.horizon)?;
    let models_dir = out.join("models");
    std::fs::create_dir_all(&models_dir)
        .with_context(|| format!("cannot create {}", models_dir.display()))?;

    let mut trained = 0;
    for entry in &config.models {
        let Some(kind) = entry.builtin_kind() else {
            println!("{}: external model, nothing to train", entry.name);
            continue;
        };
        let train_config = entry.train_config(config.seed);
        let model = train(kind, &windows, &train_config)
            .with_context(|| format!("training model '{}' failed", entry.name))?;
        let mse = training_mse(&model, &windows)?;
        let path = models_dir.join(format!("{}.json", entry.name));
        let saved = SavedModel::from_model(&model)?;
        atomic_write(&path, serde_json::to_string_pretty(&saved)?.as_bytes())?;
        println!("{}: train MSE {mse:.6e} -> {}", entry.name, path.display());
        trained += 1;
    }
    if trained == 0 {
        anyhow::bail!("no built-in models in the roster; nothing was trained");
    }
    Ok(())
}
