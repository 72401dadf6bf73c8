//! Trend/seasonal split via centered moving average.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Splits a `[lookback][k]` window into (trend, seasonal) per feature.
///
/// The trend is a centered moving average with an odd kernel and replicated
/// edge values; the seasonal part is the residual, so `trend + seasonal`
/// reconstructs the input. A kernel of 1 yields `trend == input` and an
/// all-zero seasonal component.
pub fn decompose(input: &Array2<f64>, kernel: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let (lookback, k) = input.dim();
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::Config(format!(
            "moving-average kernel must be odd and >= 1, got {kernel}"
        )));
    }
    if kernel > lookback {
        return Err(Error::Config(format!(
            "moving-average kernel {kernel} exceeds lookback {lookback}"
        )));
    }
    let half = kernel / 2;
    let mut trend = Array2::<f64>::zeros((lookback, k));
    for f in 0..k {
        for t in 0..lookback {
            let mut sum = 0.0;
            for offset in -(half as i64)..=half as i64 {
                let idx = (t as i64 + offset).clamp(0, lookback as i64 - 1) as usize;
                sum += input[[idx, f]];
            }
            trend[[t, f]] = sum / kernel as f64;
        }
    }
    let seasonal = input - &trend;
    Ok((trend, seasonal))
}
