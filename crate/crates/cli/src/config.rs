//! Run configuration: a single TOML document describing the dataset, the
//! model roster, and the method roster of one benchmark run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sabench_core::{
    BaselineMode, BaselinePolicy, BaselineScope, BuiltinKind, CsvSchema, DeltaMode, MorrisConfig,
    OcclusionConfig, SynthConfig, TrainConfig,
};

/// Top-level run configuration, mapped one-to-one onto the TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; per-model and per-method seeds default to it.
    pub seed: u64,
    pub lookback: usize,
    pub horizon: usize,
    /// Default output directory; the --out flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub models: Vec<ModelEntry>,
    pub methods: Vec<MethodEntry>,
}

/// Dataset source: a synthetic generator or a CSV file plus column mapping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synth {
        entities: usize,
        days: usize,
        k: usize,
        weights: Vec<f64>,
        noise_sd: f64,
        /// Leading features that are constant per entity. Defaults to all
        /// of them, matching slow-moving demographic covariates.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        static_count: Option<usize>,
    },
    Csv {
        path: PathBuf,
        entity_column: String,
        date_column: String,
        target_column: String,
        feature_columns: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        static_features: Vec<String>,
        #[serde(default)]
        max_fill_gap: usize,
        #[serde(default)]
        normalize_per_entity: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LinearDecomp,
    Mlp,
    External,
}

/// One model in the roster. Training fields apply to built-in kinds,
/// `command`/`timeout_secs` to external adapters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub name: String,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moving_average_kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Morris,
    ScaledMorris,
    Ablation,
    Occlusion,
}

impl MethodKind {
    pub fn id(&self) -> &'static str {
        match self {
            MethodKind::Morris => "morris",
            MethodKind::ScaledMorris => "scaled-morris",
            MethodKind::Ablation => "ablation",
            MethodKind::Occlusion => "occlusion",
        }
    }
}

/// One sensitivity method in the roster.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    /// Cell label; defaults to the kind id. Must be unique.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_mode: Option<DeltaMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_mode: Option<BaselineMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

impl MethodEntry {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.id().to_string())
    }

    pub fn morris_config(&self, global_seed: u64) -> MorrisConfig {
        let defaults = MorrisConfig::default();
        MorrisConfig {
            delta_mode: self.delta_mode.unwrap_or(defaults.delta_mode),
            delta: self.delta.unwrap_or(defaults.delta),
            samples_r: self.samples_r.unwrap_or(defaults.samples_r),
            seed: self.seed.unwrap_or(global_seed),
        }
    }

    pub fn baseline_policy(&self, scope: BaselineScope) -> BaselinePolicy {
        BaselinePolicy {
            mode: self.baseline_mode.unwrap_or(BaselineMode::FeatureMean),
            scope,
        }
    }

    pub fn occlusion_config(&self) -> OcclusionConfig {
        let defaults = OcclusionConfig::default();
        OcclusionConfig {
            patch_length: self.patch_length.unwrap_or(defaults.patch_length),
            stride: self.stride.unwrap_or(defaults.stride),
            baseline: self.baseline_policy(BaselineScope::TimeSlice),
        }
    }
}

impl ModelEntry {
    pub fn builtin_kind(&self) -> Option<BuiltinKind> {
        match self.kind {
            ModelKind::LinearDecomp => Some(BuiltinKind::LinearDecomp),
            ModelKind::Mlp => Some(BuiltinKind::Mlp),
            ModelKind::External => None,
        }
    }

    pub fn train_config(&self, global_seed: u64) -> TrainConfig {
        let defaults = TrainConfig::default();
        TrainConfig {
            epochs: self.epochs.unwrap_or(defaults.epochs),
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            batch_size: self.batch_size.unwrap_or(defaults.batch_size),
            seed: self.seed.unwrap_or(global_seed),
            l2: self.l2.unwrap_or(defaults.l2),
            moving_average_kernel: self
                .moving_average_kernel
                .unwrap_or(defaults.moving_average_kernel),
            hidden_width: self.hidden_width.unwrap_or(defaults.hidden_width),
        }
    }
}

fn valid_label(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&raw)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.lookback < 1 || self.horizon < 1 {
            bail!("lookback and horizon must be >= 1");
        }
        if self.models.is_empty() {
            bail!("config needs at least one [[models]] entry");
        }
        if self.methods.is_empty() {
            bail!("config needs at least one [[methods]] entry");
        }
        let mut model_names = std::collections::BTreeSet::new();
        for m in &self.models {
            if !valid_label(&m.name) {
                bail!("model name '{}' must match [A-Za-z0-9_-]+", m.name);
            }
            if !model_names.insert(&m.name) {
                bail!("duplicate model name '{}'", m.name);
            }
            match m.kind {
                ModelKind::External => {
                    if m.command.as_ref().map_or(true, |c| c.is_empty()) {
                        bail!("external model '{}' needs a non-empty command", m.name);
                    }
                }
                _ => {
                    if m.command.is_some() {
                        bail!("built-in model '{}' must not set a command", m.name);
                    }
                }
            }
        }
        let mut method_names = std::collections::BTreeSet::new();
        for m in &self.methods {
            let label = m.label();
            if !valid_label(&label) {
                bail!("method name '{label}' must match [A-Za-z0-9_-]+");
            }
            if !method_names.insert(label.clone()) {
                bail!("duplicate method name '{label}'");
            }
        }
        if let DatasetConfig::Synth {
            k,
            weights,
            static_count,
            ..
        } = &self.dataset
        {
            if weights.len() != *k {
                bail!("dataset.weights has {} entries for k = {k}", weights.len());
            }
            if let Some(sc) = static_count {
                if sc > k {
                    bail!("dataset.static_count {sc} exceeds k = {k}");
                }
            }
        }
        Ok(())
    }

    pub fn synth_config(&self) -> anyhow::Result<SynthConfig> {
        match &self.dataset {
            DatasetConfig::Synth {
                entities,
                days,
                k,
                weights,
                noise_sd,
                static_count,
            } => Ok(SynthConfig {
                entities: *entities,
                days: *days,
                k: *k,
                weights: weights.clone(),
                noise_sd: *noise_sd,
                seed: self.seed,
                static_count: static_count.unwrap_or(*k),
            }),
            DatasetConfig::Csv { .. } => bail!("dataset source is csv, not synth"),
        }
    }

    pub fn csv_schema(&self) -> anyhow::Result<(PathBuf, CsvSchema)> {
        match &self.dataset {
            DatasetConfig::Csv {
                path,
                entity_column,
                date_column,
                target_column,
                feature_columns,
                static_features,
                max_fill_gap,
                normalize_per_entity,
            } => Ok((
                path.clone(),
                CsvSchema {
                    entity_column: entity_column.clone(),
                    date_column: date_column.clone(),
                    target_column: target_column.clone(),
                    feature_columns: feature_columns.clone(),
                    static_features: static_features.clone(),
                    max_fill_gap: *max_fill_gap,
                    normalize_per_entity: *normalize_per_entity,
                },
            )),
            DatasetConfig::Synth { .. } => bail!("dataset source is synth, not csv"),
        }
    }

    /// SHA-256 over the canonical JSON form of every semantically meaningful
    /// field. The output directory is presentation, not semantics, and is
    /// excluded.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.out_dir = None;
        let bytes = serde_json::to_vec(&semantic).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}
