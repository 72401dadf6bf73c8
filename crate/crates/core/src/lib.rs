//! Sensitivity-analysis benchmark engine for sliding-window time-series
//! forecasters.
//!
//! The crate is organized around four stages:
//!
//! - [`panel`] — panel dataset ingestion, per-feature statistics, sliding
//!   windows, and a synthetic generator with planted feature importance.
//! - [`model`] — trainable desk-scale forecasters (linear with trend/seasonal
//!   decomposition, tanh MLP) plus an out-of-process adapter for external
//!   models speaking a line-delimited JSON protocol.
//! - [`sensitivity`] — perturbation-based importance methods: elementary
//!   effects (plain and scaled) and feature ablation/occlusion.
//! - [`ranking`] — tie-aware rankings and Spearman rank correlation for
//!   cross-method, cross-model, and against-ground-truth comparisons.

pub mod error;
pub mod model;
pub mod panel;
pub mod ranking;
pub mod sensitivity;

pub use error::{Error, Result};
pub use model::{
    decompose, train, training_mse, BuiltinKind, ExternalModel, ForecastModel, Forecaster,
    LinearDecompModel, MlpModel, ModelSpec, SavedModel, TrainConfig, DEFAULT_ADAPTER_TIMEOUT,
};
pub use panel::{
    load_panel, make_windows, synth_generate, write_panel_csv, CsvSchema, FeatureStats, GroundTruthRanking,
    Panel, SynthConfig, TruthSource, Window, WindowSet,
};
pub use ranking::{accuracy, agreement_matrix, rank, spearman, CorrelationMatrix, RankVector};
pub use sensitivity::{
    ablation, elementary_effect, morris, occlusion, scaled_morris, BaselineMode, BaselinePolicy,
    BaselineScope, DeltaMode, Method, MorrisConfig, OcclusionConfig, SensitivityReport,
};
