//! `sabench serve` — reference adapter: expose a saved built-in model (or a
//! trivial echo predictor) over the line-delimited JSON protocol on stdio.
//!
//! This is both the bridge for running saved models as "external" grid
//! entries and the reference implementation for adapter authors. The
//! `--declare-*` and `--fail-after` flags inject protocol faults for
//! integration testing.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::Context;
use ndarray::Array2;
use serde::Deserialize;
use sabench_core::{Forecaster, ModelSpec, SavedModel};

#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    /// Saved model JSON to serve.
    #[arg(long, conflicts_with = "echo")]
    pub model: Option<PathBuf>,
    /// Serve the echo predictor instead of a model: the last time step of
    /// the first feature, repeated over the horizon.
    #[arg(long)]
    pub echo: bool,
    #[arg(long, required_if_eq("echo", "true"))]
    pub lookback: Option<usize>,
    #[arg(long, required_if_eq("echo", "true"))]
    pub horizon: Option<usize>,
    #[arg(long, required_if_eq("echo", "true"))]
    pub k: Option<usize>,
    /// Testing aid: report this lookback in the handshake instead of the
    /// real one.
    #[arg(long)]
    pub declare_lookback: Option<usize>,
    /// Testing aid: report this horizon in the handshake.
    #[arg(long)]
    pub declare_horizon: Option<usize>,
    /// Testing aid: report this k in the handshake.
    #[arg(long)]
    pub declare_k: Option<usize>,
    /// Testing aid: exit(1) abruptly after N successful predictions.
    #[arg(long)]
    pub fail_after: Option<usize>,
}

#[derive(Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request {
    Spec,
    Predict { input: Vec<Vec<f64>> },
    Shutdown,
}

enum Served {
    Model(sabench_core::ForecastModel),
    Echo(ModelSpec),
}

impl Served {
    fn spec(&self) -> ModelSpec {
        match self {
            Served::Model(m) => m.spec(),
            Served::Echo(spec) => *spec,
        }
    }

    fn predict(&self, input: &Array2<f64>) -> anyhow::Result<Vec<f64>> {
        match self {
            Served::Model(m) => Ok(m.predict(input)?.to_vec()),
            Served::Echo(spec) => {
                let last = input[[spec.lookback - 1, 0]];
                Ok(vec![last; spec.horizon])
            }
        }
    }
}

pub fn cmd_serve(args: &ServeArgs) -> anyhow::Result<()> {
    let served = if args.echo {
        Served::Echo(ModelSpec {
            lookback: args.lookback.context("--echo requires --lookback")?,
            horizon: args.horizon.context("--echo requires --horizon")?,
            k: args.k.context("--echo requires --k")?,
        })
    } else {
        let path = args
            .model
            .as_ref()
            .context("serve needs --model <file> or --echo")?;
        Served::Model(SavedModel::load(path)?.into_model()?)
    };
    let spec = served.spec();
    let declared = ModelSpec {
        lookback: args.declare_lookback.unwrap_or(spec.lookback),
        horizon: args.declare_horizon.unwrap_or(spec.horizon),
        k: args.declare_k.unwrap_or(spec.k),
    };

    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut predictions = 0usize;

    for line in stdin.lock().lines() {
        let line = line.context("failed to read request")?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)
            .with_context(|| format!("garbled request frame: {line}"))?;
        match request {
            Request::Spec => {
                writeln!(
                    out,
                    "{}",
                    serde_json::json!({
                        "lookback": declared.lookback,
                        "horizon": declared.horizon,
                        "k": declared.k,
                    })
                )?;
                out.flush()?;
            }
            Request::Predict { input } => {
                if let Some(limit) = args.fail_after {
                    if predictions >= limit {
                        // Simulated crash for fault-isolation tests.
                        std::process::exit(1);
                    }
                }
                let rows = input.len();
                let cols = input.first().map_or(0, |r| r.len());
                if rows != spec.lookback || input.iter().any(|r| r.len() != cols) || cols != spec.k
                {
                    anyhow::bail!(
                        "predict input is {rows}x{cols}, expected {}x{}",
                        spec.lookback,
                        spec.k
                    );
                }
                let matrix = Array2::from_shape_vec(
                    (rows, cols),
                    input.into_iter().flatten().collect(),
                )?;
                let forecast = served.predict(&matrix)?;
                writeln!(out, "{}", serde_json::json!({ "forecast": forecast }))?;
                out.flush()?;
                predictions += 1;
            }
            Request::Shutdown => return Ok(()),
        }
    }
    Ok(())
}
