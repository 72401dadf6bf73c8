//! Perturbation-based feature importance for black-box forecasters.
//!
//! Three method families over a shared evaluation core:
//!
//! - elementary effects: add a small delta to one feature over the whole
//!   lookback and divide the output change by delta, aggregated over seeded
//!   base windows into mu / mu_star / sigma (plus a scaled variant that
//!   removes feature and output units);
//! - feature ablation: replace one feature with a baseline value over the
//!   whole lookback and record the absolute output change;
//! - feature occlusion: slide a baseline patch along the lookback axis to
//!   localize importance in time.
//!
//! The forecast vector is reduced to a scalar as the mean over horizon
//! steps; per-step detail is kept in the report payload. Perturbations and
//! baselines always cover all lookback steps of a feature at once, so
//! time-constant covariates stay on-manifold.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Forecaster;
use crate::panel::{FeatureStats, WindowSet};

/// How the perturbation size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// `delta` is in raw feature units.
    Absolute,
    /// `delta` is a fraction of each feature's standard deviation.
    RelativeToStd,
}

/// Elementary-effect sampling configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisConfig {
    pub delta_mode: DeltaMode,
    pub delta: f64,
    /// Number of base windows sampled without replacement.
    pub samples_r: usize,
    pub seed: u64,
}

impl Default for MorrisConfig {
    fn default() -> Self {
        Self {
            delta_mode: DeltaMode::RelativeToStd,
            delta: 0.1,
            samples_r: 32,
            seed: 0,
        }
    }
}

/// Replacement value used by ablation and occlusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    Zero,
    /// Global per-feature mean; avoids off-scale replacements for
    /// percentage-like features.
    FeatureMean,
}

/// Where the replacement applies: the whole lookback (ablation) or a sliding
/// time slice (occlusion patches).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineScope {
    WholeWindow,
    TimeSlice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselinePolicy {
    pub mode: BaselineMode,
    pub scope: BaselineScope,
}

impl Default for BaselinePolicy {
    fn default() -> Self {
        Self {
            mode: BaselineMode::FeatureMean,
            scope: BaselineScope::WholeWindow,
        }
    }
}

/// Occlusion patch geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionConfig {
    /// Patch length in time steps (1 ..= lookback).
    pub patch_length: usize,
    pub stride: usize,
    pub baseline: BaselinePolicy,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            patch_length: 3,
            stride: 1,
            baseline: BaselinePolicy {
                mode: BaselineMode::FeatureMean,
                scope: BaselineScope::TimeSlice,
            },
        }
    }
}

/// Sensitivity method identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Morris,
    ScaledMorris,
    Ablation,
    Occlusion,
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Morris => "morris",
            Method::ScaledMorris => "scaled-morris",
            Method::Ablation => "ablation",
            Method::Occlusion => "occlusion",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Per-feature importance scores from one (model, method) run.
///
/// Morris variants fill `mu` (signed mean effect), `mu_star` (mean absolute
/// effect), and `sigma` (population spread of effects); ablation and
/// occlusion fill `importance` (mean absolute output change). `per_step`
/// holds mean signed per-horizon-step effects, `per_position` the occlusion
/// `[feature][patch position]` detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub method: Method,
    pub model: String,
    pub features: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub importance: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_step: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_position: Option<Vec<Vec<f64>>>,
    pub window_count: usize,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl SensitivityReport {
    /// The score vector that defines this report's feature ranking:
    /// `mu_star` for Morris variants, `importance` otherwise.
    pub fn ranking_scores(&self) -> &[f64] {
        match self.method {
            Method::Morris | Method::ScaledMorris => {
                self.mu_star.as_deref().expect("morris report carries mu_star")
            }
            Method::Ablation | Method::Occlusion => {
                self.importance.as_deref().expect("report carries importance")
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&raw)?)
    }
}

/// Mean over horizon steps: the scalar output the methods perturb.
fn aggregate(forecast: &Array1<f64>) -> f64 {
    forecast.iter().sum::<f64>() / forecast.len() as f64
}

fn predict_checked(
    model: &dyn Forecaster,
    input: &Array2<f64>,
    context: &str,
) -> Result<Array1<f64>> {
    let out = model.predict(input)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!(
            "model produced a non-finite output ({context})"
        )));
    }
    Ok(out)
}

/// Finite-difference sensitivity of the aggregated output with respect to
/// feature `feature`: delta is added at every lookback step and the change
/// in the horizon-mean forecast is divided by delta.
pub fn elementary_effect(
    model: &dyn Forecaster,
    input: &Array2<f64>,
    feature: usize,
    delta: f64,
) -> Result<f64> {
    let base = predict_checked(model, input, "base window")?;
    let (effect, _) = effect_against_base(model, input, &base, feature, delta)?;
    Ok(effect)
}

/// Elementary effect against a precomputed base forecast. Returns the scalar
/// effect and the per-horizon-step effects.
fn effect_against_base(
    model: &dyn Forecaster,
    input: &Array2<f64>,
    base: &Array1<f64>,
    feature: usize,
    delta: f64,
) -> Result<(f64, Vec<f64>)> {
    let k = input.ncols();
    if feature >= k {
        return Err(Error::Config(format!(
            "feature index {feature} out of range for k = {k}"
        )));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Config(format!("delta must be finite and non-zero, got {delta}")));
    }
    let mut perturbed = input.clone();
    for t in 0..perturbed.nrows() {
        perturbed[[t, feature]] += delta;
    }
    let shifted = predict_checked(model, &perturbed, "perturbed window")?;
    let per_step: Vec<f64> = shifted
        .iter()
        .zip(base.iter())
        .map(|(p, b)| (p - b) / delta)
        .collect();
    Ok((
        (aggregate(&shifted) - aggregate(base)) / delta,
        per_step,
    ))
}

/// Resolves the per-feature perturbation sizes for a Morris run. In
/// relative mode every feature must carry variation.
fn resolve_deltas(config: &MorrisConfig, stats: &FeatureStats) -> Result<Vec<f64>> {
    if !(config.delta > 0.0) || !config.delta.is_finite() {
        return Err(Error::Config(format!(
            "delta must be positive and finite, got {}",
            config.delta
        )));
    }
    match config.delta_mode {
        DeltaMode::Absolute => Ok(vec![config.delta; stats.features.len()]),
        DeltaMode::RelativeToStd => {
            let offenders: Vec<&str> = stats
                .features
                .iter()
                .zip(&stats.std)
                .filter(|(_, &s)| s == 0.0)
                .map(|(f, _)| f.as_str())
                .collect();
            if !offenders.is_empty() {
                return Err(Error::Config(format!(
                    "relative delta mode requires nonzero std; constant features: {}",
                    offenders.join(", ")
                )));
            }
            Ok(stats.std.iter().map(|s| config.delta * s).collect())
        }
    }
}

/// Elementary-effect screening over seeded base windows.
///
/// `samples_r` base windows are drawn without replacement and shared by all
/// features; one feature is varied at a time from each shared base. The
/// report is a pure function of (model, windows, stats, config).
pub fn morris(
    model: &dyn Forecaster,
    model_id: &str,
    windows: &WindowSet,
    stats: &FeatureStats,
    config: &MorrisConfig,
) -> Result<SensitivityReport> {
    let n = windows.len();
    let k = windows.k();
    let horizon = windows.horizon();
    if config.samples_r < 1 {
        return Err(Error::Config("samples_r must be >= 1".into()));
    }
    if config.samples_r > n {
        return Err(Error::Config(format!(
            "samples_r = {} exceeds the {} available windows",
            config.samples_r, n
        )));
    }
    let deltas = resolve_deltas(config, stats)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sampled = rand::seq::index::sample(&mut rng, n, config.samples_r).into_vec();

    let r = config.samples_r as f64;
    let mut effects = vec![Vec::with_capacity(config.samples_r); k];
    let mut per_step = vec![vec![0.0; horizon]; k];
    for &wi in &sampled {
        let window = &windows.windows()[wi];
        let base = predict_checked(model, &window.input, &format!("window {wi}"))?;
        for f in 0..k {
            let (effect, steps) = effect_against_base(model, &window.input, &base, f, deltas[f])?;
            effects[f].push(effect);
            for h in 0..horizon {
                per_step[f][h] += steps[h] / r;
            }
        }
    }

    let mut mu = vec![0.0; k];
    let mut mu_star = vec![0.0; k];
    let mut sigma = vec![0.0; k];
    for f in 0..k {
        let mean: f64 = effects[f].iter().sum::<f64>() / r;
        mu[f] = mean;
        mu_star[f] = effects[f].iter().map(|e| e.abs()).sum::<f64>() / r;
        sigma[f] = (effects[f].iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / r).sqrt();
    }

    Ok(SensitivityReport {
        method: Method::Morris,
        model: model_id.to_string(),
        features: stats.features.clone(),
        mu: Some(mu),
        mu_star: Some(mu_star),
        sigma: Some(sigma),
        importance: None,
        per_step: Some(per_step),
        per_position: None,
        window_count: config.samples_r,
        config: serde_json::to_value(config)?,
        warnings: Vec::new(),
    })
}

/// Rescales a Morris report into unit-free indices:
/// `mu_star_i * std_i / output_scale` (mu and sigma scaled identically).
///
/// `output_scale` is the standard deviation of the target over the training
/// windows. A constant feature (std 0) gets index 0 plus a warning flag.
/// The normalization formula is recorded in the report config.
pub fn scaled_morris(
    report: &SensitivityReport,
    stats: &FeatureStats,
    output_scale: f64,
) -> Result<SensitivityReport> {
    if report.method != Method::Morris {
        return Err(Error::Config(format!(
            "scaled-morris rescales a morris report, got method '{}'",
            report.method
        )));
    }
    if !(output_scale > 0.0) || !output_scale.is_finite() {
        return Err(Error::Config(format!(
            "output_scale must be positive and finite, got {output_scale}"
        )));
    }
    if report.features != stats.features {
        return Err(Error::Input(format!(
            "report features {:?} do not match stats features {:?}",
            report.features, stats.features
        )));
    }
    let k = report.features.len();
    let mut warnings = report.warnings.clone();
    let mut scale = vec![0.0; k];
    for f in 0..k {
        if stats.std[f] == 0.0 {
            warnings.push(format!(
                "feature '{}' carries no variation (std 0); scaled index set to 0",
                report.features[f]
            ));
        } else {
            scale[f] = stats.std[f] / output_scale;
        }
    }
    let rescale = |v: &Option<Vec<f64>>| -> Option<Vec<f64>> {
        v.as_ref()
            .map(|xs| xs.iter().zip(&scale).map(|(x, s)| x * s).collect())
    };
    let per_step = report.per_step.as_ref().map(|rows| {
        rows.iter()
            .zip(&scale)
            .map(|(row, s)| row.iter().map(|x| x * s).collect())
            .collect()
    });
    let mut config = report.config.clone();
    if let serde_json::Value::Object(map) = &mut config {
        map.insert("output_scale".into(), serde_json::json!(output_scale));
        map.insert(
            "normalization".into(),
            serde_json::json!("mu_star * feature_std / output_scale (stand-in index)"),
        );
    }
    Ok(SensitivityReport {
        method: Method::ScaledMorris,
        model: report.model.clone(),
        features: report.features.clone(),
        mu: rescale(&report.mu),
        mu_star: rescale(&report.mu_star),
        sigma: rescale(&report.sigma),
        importance: None,
        per_step,
        per_position: None,
        window_count: report.window_count,
        config,
        warnings,
    })
}

fn baseline_values(policy: &BaselinePolicy, stats: &FeatureStats) -> Vec<f64> {
    match policy.mode {
        BaselineMode::Zero => vec![0.0; stats.features.len()],
        BaselineMode::FeatureMean => stats.mean.clone(),
    }
}

/// Whole-window feature ablation: importance is the mean absolute change of
/// the aggregated output when one feature is replaced by its baseline over
/// the entire lookback. Deterministic; every window is used.
pub fn ablation(
    model: &dyn Forecaster,
    model_id: &str,
    windows: &WindowSet,
    stats: &FeatureStats,
    baseline: &BaselinePolicy,
) -> Result<SensitivityReport> {
    if windows.is_empty() {
        return Err(Error::EmptyWindows("ablation needs at least one window".into()));
    }
    let k = windows.k();
    let horizon = windows.horizon();
    let repl = baseline_values(baseline, stats);
    let n = windows.len() as f64;

    let mut importance = vec![0.0; k];
    let mut per_step = vec![vec![0.0; horizon]; k];
    for (wi, window) in windows.windows().iter().enumerate() {
        let base = predict_checked(model, &window.input, &format!("window {wi}"))?;
        let g_base = aggregate(&base);
        for f in 0..k {
            let mut replaced = window.input.clone();
            for t in 0..replaced.nrows() {
                replaced[[t, f]] = repl[f];
            }
            let out = predict_checked(model, &replaced, &format!("window {wi}, feature {f}"))?;
            importance[f] += (aggregate(&out) - g_base).abs() / n;
            for h in 0..horizon {
                per_step[f][h] += (out[h] - base[h]) / n;
            }
        }
    }

    Ok(SensitivityReport {
        method: Method::Ablation,
        model: model_id.to_string(),
        features: stats.features.clone(),
        mu: None,
        mu_star: None,
        sigma: None,
        importance: Some(importance),
        per_step: Some(per_step),
        per_position: None,
        window_count: windows.len(),
        config: serde_json::to_value(baseline)?,
        warnings: Vec::new(),
    })
}

/// Sliding-patch feature occlusion. A `patch_length`-step baseline patch is
/// slid along the lookback axis by `stride`; per-feature importance is the
/// mean absolute output change over (windows x patch positions), and the
/// per-position matrix is kept in the report payload.
pub fn occlusion(
    model: &dyn Forecaster,
    model_id: &str,
    windows: &WindowSet,
    stats: &FeatureStats,
    config: &OcclusionConfig,
) -> Result<SensitivityReport> {
    if windows.is_empty() {
        return Err(Error::EmptyWindows("occlusion needs at least one window".into()));
    }
    let lookback = windows.lookback();
    if config.patch_length < 1 || config.stride < 1 {
        return Err(Error::Config(
            "patch_length and stride must be >= 1".into(),
        ));
    }
    if config.patch_length > lookback {
        return Err(Error::Config(format!(
            "patch_length {} exceeds lookback {lookback}",
            config.patch_length
        )));
    }
    let positions: Vec<usize> = (0..=lookback - config.patch_length)
        .step_by(config.stride)
        .collect();
    let k = windows.k();
    let repl = baseline_values(&config.baseline, stats);
    let n = windows.len() as f64;

    let mut per_position = vec![vec![0.0; positions.len()]; k];
    for (wi, window) in windows.windows().iter().enumerate() {
        let base = predict_checked(model, &window.input, &format!("window {wi}"))?;
        let g_base = aggregate(&base);
        for f in 0..k {
            for (pi, &start) in positions.iter().enumerate() {
                let mut patched = window.input.clone();
                for t in start..start + config.patch_length {
                    patched[[t, f]] = repl[f];
                }
                let out = predict_checked(
                    model,
                    &patched,
                    &format!("window {wi}, feature {f}, position {start}"),
                )?;
                per_position[f][pi] += (aggregate(&out) - g_base).abs() / n;
            }
        }
    }
    let importance: Vec<f64> = per_position
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();

    Ok(SensitivityReport {
        method: Method::Occlusion,
        model: model_id.to_string(),
        features: stats.features.clone(),
        mu: None,
        mu_star: None,
        sigma: None,
        importance: Some(importance),
        per_step: None,
        per_position: Some(per_position),
        window_count: windows.len(),
        config: serde_json::to_value(config)?,
        warnings: Vec::new(),
    })
}
