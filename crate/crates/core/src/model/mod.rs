//! Forecast models: the black-box prediction function mapping a
//! `[lookback][k]` input window to a `[horizon]` forecast.
//!
//! Two trainable desk-scale forecasters are built in (a linear model over a
//! trend/seasonal decomposition and a one-hidden-layer tanh MLP), plus an
//! adapter that runs any external model as a child process speaking a
//! line-delimited JSON protocol.

mod decomp;
mod external;
mod linear;
mod mlp;

pub use decomp::decompose;
pub use external::{ExternalModel, DEFAULT_ADAPTER_TIMEOUT};
pub use linear::LinearDecompModel;
pub use mlp::MlpModel;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::WindowSet;

/// Input/output geometry of a forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub lookback: usize,
    pub horizon: usize,
    pub k: usize,
}

impl ModelSpec {
    pub fn input_len(&self) -> usize {
        self.lookback * self.k
    }
}

/// A predictor mapping an input window to a forecast vector. `predict` is
/// pure: repeated calls on the same input return identical values.
pub trait Forecaster: Send + Sync {
    fn spec(&self) -> ModelSpec;

    /// Maps a finite `[lookback][k]` matrix to a finite `[horizon]` vector.
    fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>>;
}

/// Checks the predict input contract: exact shape and finite values.
pub(crate) fn validate_input(spec: &ModelSpec, input: &Array2<f64>) -> Result<()> {
    let (rows, cols) = input.dim();
    if rows != spec.lookback || cols != spec.k {
        return Err(Error::Contract(format!(
            "expected a [{}][{}] input window, got [{rows}][{cols}]",
            spec.lookback, spec.k
        )));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("input window contains non-finite values".into()));
    }
    Ok(())
}

/// Built-in trainable model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinKind {
    LinearDecomp,
    Mlp,
}

/// Training hyperparameters for the built-in models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// L2 penalty coefficient on all weights.
    pub l2: f64,
    /// Odd centered moving-average kernel (linear-decomp only).
    pub moving_average_kernel: usize,
    /// Hidden layer width (MLP only).
    pub hidden_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 64,
            seed: 0,
            l2: 0.0,
            moving_average_kernel: 5,
            hidden_width: 16,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::Config(format!("l2 must be >= 0, got {}", self.l2)));
        }
        Ok(())
    }
}

/// A forecast model handle: built-in (owning its parameters) or external
/// (owning an adapter channel).
#[derive(Debug)]
pub enum ForecastModel {
    LinearDecomp(LinearDecompModel),
    Mlp(MlpModel),
    External(ExternalModel),
}

impl Forecaster for ForecastModel {
    fn spec(&self) -> ModelSpec {
        match self {
            ForecastModel::LinearDecomp(m) => m.spec(),
            ForecastModel::Mlp(m) => m.spec(),
            ForecastModel::External(m) => m.spec(),
        }
    }

    fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        match self {
            ForecastModel::LinearDecomp(m) => m.predict(input),
            ForecastModel::Mlp(m) => m.predict(input),
            ForecastModel::External(m) => m.predict(input),
        }
    }
}

/// Trains a built-in model on a window set with mini-batch gradient descent.
///
/// Deterministic given (windows, config): parameters are initialized from a
/// seeded uniform(-0.05, 0.05) draw and batches are shuffled with the same
/// seeded generator, single-threaded.
pub fn train(kind: BuiltinKind, windows: &WindowSet, config: &TrainConfig) -> Result<ForecastModel> {
    if windows.is_empty() {
        return Err(Error::Training("cannot train on an empty window set".into()));
    }
    config.validate()?;
    match kind {
        BuiltinKind::LinearDecomp => Ok(ForecastModel::LinearDecomp(linear::train_linear(
            windows, config,
        )?)),
        BuiltinKind::Mlp => Ok(ForecastModel::Mlp(mlp::train_mlp(windows, config)?)),
    }
}

/// Mean squared error of a model over a window set (mean over windows and
/// horizon steps).
pub fn training_mse(model: &dyn Forecaster, windows: &WindowSet) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for w in windows.windows() {
        let pred = model.predict(&w.input)?;
        for (p, y) in pred.iter().zip(w.target.iter()) {
            let d = p - y;
            sum += d * d;
            n += 1;
        }
    }
    Ok(sum / n as f64)
}

/// On-disk form of a trained built-in model. External models hold a live
/// process and cannot be saved.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SavedModel {
    LinearDecomp {
        lookback: usize,
        horizon: usize,
        k: usize,
        kernel: usize,
        /// Row-major [horizon][lookback*k].
        w_trend: Vec<f64>,
        w_seasonal: Vec<f64>,
    },
    Mlp {
        lookback: usize,
        horizon: usize,
        k: usize,
        hidden_width: usize,
        /// Row-major [hidden][lookback*k].
        w1: Vec<f64>,
        b1: Vec<f64>,
        /// Row-major [horizon][hidden].
        w2: Vec<f64>,
        b2: Vec<f64>,
    },
}

impl SavedModel {
    pub fn from_model(model: &ForecastModel) -> Result<Self> {
        match model {
            ForecastModel::LinearDecomp(m) => Ok(m.to_saved()),
            ForecastModel::Mlp(m) => Ok(m.to_saved()),
            ForecastModel::External(_) => Err(Error::Config(
                "external models hold a live adapter process and cannot be saved".into(),
            )),
        }
    }

    pub fn into_model(self) -> Result<ForecastModel> {
        match self {
            SavedModel::LinearDecomp { .. } => Ok(ForecastModel::LinearDecomp(
                LinearDecompModel::from_saved(self)?,
            )),
            SavedModel::Mlp { .. } => Ok(ForecastModel::Mlp(MlpModel::from_saved(self)?)),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&raw)?)
    }
}

/// Flattens a `[lookback][k]` matrix row-major (time-major) into a vector.
pub(crate) fn flatten(input: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(input.iter().copied())
}
