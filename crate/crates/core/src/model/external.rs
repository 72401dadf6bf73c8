//! Out-of-process model adapter.
//!
//! An external model is a child process speaking line-delimited JSON on
//! stdin/stdout, one request in flight at a time:
//!
//! ```text
//! -> {"op":"spec"}                               <- {"lookback":13,"horizon":15,"k":8}
//! -> {"op":"predict","input":[[..k floats..] x lookback]}  <- {"forecast":[..horizon floats..]}
//! -> {"op":"shutdown"}                           <- process exits 0
//! ```
//!
//! Responses arrive in request order; floats are plain JSON numbers. Each
//! request is bounded by a per-request timeout (default 30 s).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{validate_input, ModelSpec};

/// Per-request timeout applied when none is configured.
pub const DEFAULT_ADAPTER_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Spec,
    Predict { input: &'a Vec<Vec<f64>> },
    Shutdown,
}

#[derive(Deserialize)]
struct SpecResponse {
    lookback: usize,
    horizon: usize,
    k: usize,
}

#[derive(Deserialize)]
struct PredictResponse {
    forecast: Vec<f64>,
}

struct Channel {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl super::Forecaster for ExternalModel {
    fn spec(&self) -> ModelSpec {
        self.spec
    }

    fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        ExternalModel::predict(self, input)
    }
}

impl Drop for Channel {
    fn drop(&mut self) {
        // Best-effort orderly shutdown, then force.
        if let (Some(stdin), Ok(payload)) =
            (self.stdin.as_mut(), serde_json::to_string(&Request::Shutdown))
        {
            let _ = stdin.write_all(payload.as_bytes());
            let _ = stdin.write_all(b"\n");
            let _ = stdin.flush();
        }
        self.stdin = None; // close the pipe
        for _ in 0..50 {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) => std::thread::sleep(Duration::from_millis(10)),
                Err(_) => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Channel {
    /// Sends one request line and waits for one response line.
    fn round_trip(&mut self, request: &Request<'_>, timeout: Duration, id: &str) -> Result<String> {
        let payload = serde_json::to_string(request)?;
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Adapter(format!("adapter '{id}': stdin already closed")))?;
        stdin
            .write_all(payload.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Adapter(format!("adapter '{id}': failed to send request: {e}")))?;
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::Adapter(format!(
                "adapter '{id}': failed to read response: {e}"
            ))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Adapter(format!(
                "adapter '{id}': no response within {timeout:?}"
            ))),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self
                    .child
                    .try_wait()
                    .ok()
                    .flatten()
                    .map(|s| format!(" ({s})"))
                    .unwrap_or_default();
                Err(Error::Adapter(format!(
                    "adapter '{id}': process closed its stdout mid-stream{status}"
                )))
            }
        }
    }
}

/// Handle to a running external model process. Requests are serialized over
/// the single adapter channel, so one handle is single-lane; run several
/// adapter processes for parallelism.
pub struct ExternalModel {
    id: String,
    spec: ModelSpec,
    timeout: Duration,
    channel: Mutex<Channel>,
}

impl std::fmt::Debug for ExternalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalModel")
            .field("id", &self.id)
            .field("spec", &self.spec)
            .field("timeout", &self.timeout)
            .finish_non_exhaustive()
    }
}

impl ExternalModel {
    /// Spawns `command` and performs the spec handshake. The adapter must
    /// report exactly the expected (lookback, horizon, k).
    pub fn connect(command: &[String], expected: ModelSpec, timeout: Duration) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("external model command is empty".into()))?;
        let id = command.join(" ");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Adapter(format!("failed to spawn adapter '{id}': {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child
            .stdout
            .take()
            .expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        std::thread::Builder::new()
            .name("adapter-reader".into())
            .spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            })
            .map_err(|e| Error::Adapter(format!("failed to start reader thread: {e}")))?;

        let mut channel = Channel {
            child,
            stdin,
            lines: rx,
        };
        let line = channel.round_trip(&Request::Spec, timeout, &id)?;
        let reported: SpecResponse = serde_json::from_str(&line).map_err(|e| {
            Error::Adapter(format!("adapter '{id}': garbled spec frame '{line}': {e}"))
        })?;
        if (reported.lookback, reported.horizon, reported.k)
            != (expected.lookback, expected.horizon, expected.k)
        {
            return Err(Error::Handshake(format!(
                "adapter '{id}' reports lookback={} horizon={} k={}, engine expects lookback={} horizon={} k={}",
                reported.lookback,
                reported.horizon,
                reported.k,
                expected.lookback,
                expected.horizon,
                expected.k
            )));
        }
        Ok(Self {
            id,
            spec: expected,
            timeout,
            channel: Mutex::new(channel),
        })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        validate_input(&self.spec, input)?;
        let rows: Vec<Vec<f64>> = input.rows().into_iter().map(|r| r.to_vec()).collect();
        let mut channel = self
            .channel
            .lock()
            .unwrap_or_else(std::sync::PoisonError::into_inner);
        let line = channel.round_trip(&Request::Predict { input: &rows }, self.timeout, &self.id)?;
        let response: PredictResponse = serde_json::from_str(&line).map_err(|e| {
            Error::Adapter(format!(
                "adapter '{}': garbled predict frame '{line}': {e}",
                self.id
            ))
        })?;
        if response.forecast.len() != self.spec.horizon {
            return Err(Error::Adapter(format!(
                "adapter '{}': forecast has {} steps, expected {}",
                self.id,
                response.forecast.len(),
                self.spec.horizon
            )));
        }
        if response.forecast.iter().any(|v| !v.is_finite()) {
            return Err(Error::Adapter(format!(
                "adapter '{}': forecast contains non-finite values",
                self.id
            )));
        }
        Ok(Array1::from(response.forecast))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ModelSpec {
        ModelSpec {
            lookback: 2,
            horizon: 3,
            k: 2,
        }
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["/bin/sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn missing_executable_is_adapter_error() {
        let err = ExternalModel::connect(
            &["/nonexistent/adapter-binary".into()],
            spec(),
            Duration::from_secs(2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Adapter(_)), "{err}");
    }

    #[test]
    fn spec_mismatch_is_handshake_error() {
        let cmd = sh(r#"read line; echo '{"lookback":2,"horizon":3,"k":7}'"#);
        let err = ExternalModel::connect(&cmd, spec(), Duration::from_secs(5)).unwrap_err();
        match err {
            Error::Handshake(msg) => {
                assert!(msg.contains("k=7"), "{msg}");
                assert!(msg.contains("k=2"), "{msg}");
            }
            other => panic!("expected handshake error, got {other}"),
        }
    }

    #[test]
    fn garbled_handshake_is_adapter_error() {
        let cmd = sh(r#"read line; echo 'not json at all'"#);
        let err = ExternalModel::connect(&cmd, spec(), Duration::from_secs(5)).unwrap_err();
        assert!(matches!(err, Error::Adapter(_)), "{err}");
    }

    #[test]
    fn early_exit_is_adapter_error() {
        let err =
            ExternalModel::connect(&["/bin/true".into()], spec(), Duration::from_secs(5))
                .unwrap_err();
        assert!(matches!(err, Error::Adapter(_)), "{err}");
    }

    #[test]
    fn exit_after_handshake_fails_predict_only() {
        // Adapter that answers the handshake and then exits: connect
        // succeeds, predict reports an adapter error.
        let cmd = sh(r#"read line; echo '{"lookback":2,"horizon":3,"k":2}'"#);
        let model = ExternalModel::connect(&cmd, spec(), Duration::from_secs(5)).unwrap();
        let input = Array2::zeros((2, 2));
        let err = model.predict(&input).unwrap_err();
        assert!(matches!(err, Error::Adapter(_)), "{err}");
    }
}
