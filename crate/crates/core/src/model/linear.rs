//! Linear forecaster over a trend/seasonal decomposition.
//!
//! The input window is split into trend and seasonal parts; each part is
//! mapped to the horizon by its own linear layer and the two forecasts are
//! summed. There is no bias term, so with kernel 1 (identity decomposition)
//! predict is an exactly linear map.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::panel::WindowSet;

use super::{decompose, flatten, validate_input, ModelSpec, SavedModel, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecompModel {
    spec: ModelSpec,
    kernel: usize,
    /// [horizon][lookback*k], applied to the flattened trend component.
    w_trend: Array2<f64>,
    /// [horizon][lookback*k], applied to the flattened seasonal component.
    w_seasonal: Array2<f64>,
}

impl LinearDecompModel {
    /// Assembles a model from explicit weight matrices (shape
    /// `[horizon][lookback*k]` each).
    pub fn from_parts(
        spec: ModelSpec,
        kernel: usize,
        w_trend: Array2<f64>,
        w_seasonal: Array2<f64>,
    ) -> Result<Self> {
        if kernel == 0 || kernel % 2 == 0 || kernel > spec.lookback {
            return Err(Error::Config(format!(
                "kernel {kernel} must be odd and within lookback {}",
                spec.lookback
            )));
        }
        let expected = (spec.horizon, spec.input_len());
        if w_trend.dim() != expected || w_seasonal.dim() != expected {
            return Err(Error::Config(format!(
                "weight shapes {:?}/{:?} != {:?}",
                w_trend.dim(),
                w_seasonal.dim(),
                expected
            )));
        }
        if w_trend.iter().chain(w_seasonal.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("weights must be finite".into()));
        }
        Ok(Self {
            spec,
            kernel,
            w_trend,
            w_seasonal,
        })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn w_trend(&self) -> &Array2<f64> {
        &self.w_trend
    }

    pub fn w_seasonal(&self) -> &Array2<f64> {
        &self.w_seasonal
    }

    pub fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        validate_input(&self.spec, input)?;
        let (trend, seasonal) = decompose(input, self.kernel)?;
        let xt = flatten(&trend);
        let xs = flatten(&seasonal);
        Ok(self.w_trend.dot(&xt) + self.w_seasonal.dot(&xs))
    }

    pub(super) fn to_saved(&self) -> SavedModel {
        SavedModel::LinearDecomp {
            lookback: self.spec.lookback,
            horizon: self.spec.horizon,
            k: self.spec.k,
            kernel: self.kernel,
            w_trend: self.w_trend.iter().copied().collect(),
            w_seasonal: self.w_seasonal.iter().copied().collect(),
        }
    }

    pub(super) fn from_saved(saved: SavedModel) -> Result<Self> {
        match saved {
            SavedModel::LinearDecomp {
                lookback,
                horizon,
                k,
                kernel,
                w_trend,
                w_seasonal,
            } => {
                let spec = ModelSpec {
                    lookback,
                    horizon,
                    k,
                };
                let shape = (horizon, spec.input_len());
                let w_trend = Array2::from_shape_vec(shape, w_trend)
                    .map_err(|e| Error::Config(format!("bad w_trend shape: {e}")))?;
                let w_seasonal = Array2::from_shape_vec(shape, w_seasonal)
                    .map_err(|e| Error::Config(format!("bad w_seasonal shape: {e}")))?;
                Self::from_parts(spec, kernel, w_trend, w_seasonal)
            }
            _ => Err(Error::Config("saved model is not linear-decomp".into())),
        }
    }
}

impl super::Forecaster for LinearDecompModel {
    fn spec(&self) -> ModelSpec {
        self.spec
    }

    fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        LinearDecompModel::predict(self, input)
    }
}

pub(super) fn train_linear(windows: &WindowSet, config: &TrainConfig) -> Result<LinearDecompModel> {
    let spec = ModelSpec {
        lookback: windows.lookback(),
        horizon: windows.horizon(),
        k: windows.k(),
    };
    let kernel = config.moving_average_kernel;
    if kernel == 0 || kernel % 2 == 0 || kernel > spec.lookback {
        return Err(Error::Config(format!(
            "moving-average kernel {kernel} must be odd and within lookback {}",
            spec.lookback
        )));
    }

    // Decompose every window once up front.
    let mut data = Vec::with_capacity(windows.len());
    for w in windows.windows() {
        let (trend, seasonal) = decompose(&w.input, kernel)?;
        data.push((flatten(&trend), flatten(&seasonal), w.target.clone()));
    }

    let input_len = spec.input_len();
    let horizon = spec.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w_trend = Array2::from_shape_fn((horizon, input_len), |_| rng.gen_range(-0.05..0.05));
    let mut w_seasonal =
        Array2::from_shape_fn((horizon, input_len), |_| rng.gen_range(-0.05..0.05));

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad_t = Array2::<f64>::zeros((horizon, input_len));
    let mut grad_s = Array2::<f64>::zeros((horizon, input_len));

    for epoch in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad_t.fill(0.0);
            grad_s.fill(0.0);
            let scale = 2.0 / (horizon as f64 * batch.len() as f64);
            for &wi in batch {
                let (xt, xs, y) = &data[wi];
                let pred = w_trend.dot(xt) + w_seasonal.dot(xs);
                for h in 0..horizon {
                    let r = pred[h] - y[h];
                    epoch_loss += r * r;
                    let g = scale * r;
                    let mut row_t = grad_t.row_mut(h);
                    let mut row_s = grad_s.row_mut(h);
                    for j in 0..input_len {
                        row_t[j] += g * xt[j];
                        row_s[j] += g * xs[j];
                    }
                }
            }
            if config.l2 > 0.0 {
                grad_t.scaled_add(2.0 * config.l2, &w_trend);
                grad_s.scaled_add(2.0 * config.l2, &w_seasonal);
            }
            w_trend.scaled_add(-config.learning_rate, &grad_t);
            w_seasonal.scaled_add(-config.learning_rate, &grad_s);
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss at epoch {epoch}; lower the learning rate"
            )));
        }
    }

    LinearDecompModel::from_parts(spec, kernel, w_trend, w_seasonal)
        .map_err(|e| Error::Training(format!("training produced invalid parameters: {e}")))
}
