//! Error type shared by all engine stages.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Engine error. Variants map onto the failure classes of the pipeline
/// stages: ingestion, windowing, training, prediction, the adapter
/// protocol, sensitivity evaluation, and rank statistics.
#[derive(Debug, Error)]
pub enum Error {
    /// Input file does not match the declared column mapping.
    #[error("schema error: {0}")]
    Schema(String),

    /// Input file violates a data invariant (spacing, NaN policy, shape).
    #[error("data error: {0}")]
    Data(String),

    /// A configuration value is out of its valid domain.
    #[error("config error: {0}")]
    Config(String),

    /// No (lookback, horizon) window fits the panel.
    #[error("empty window set: {0}")]
    EmptyWindows(String),

    /// Training could not produce a model.
    #[error("training error: {0}")]
    Training(String),

    /// A predict call violated the model's input/output contract.
    #[error("contract error: {0}")]
    Contract(String),

    /// A model produced a non-finite output during sensitivity evaluation.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An external adapter declared a spec that does not match the engine's.
    #[error("handshake error: {0}")]
    Handshake(String),

    /// The external adapter misbehaved after the handshake (timeout, garbled
    /// frame, early exit).
    #[error("adapter error: {0}")]
    Adapter(String),

    /// Invalid input to a rank/correlation operation.
    #[error("input error: {0}")]
    Input(String),

    /// Correlation is undefined (zero rank variance on one side).
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// A report directory cannot be summarized.
    #[error("report error: {0}")]
    Report(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
