//! One-hidden-layer tanh MLP forecaster.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::panel::WindowSet;

use super::{flatten, validate_input, ModelSpec, SavedModel, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    spec: ModelSpec,
    /// [hidden][lookback*k]
    w1: Array2<f64>,
    b1: Array1<f64>,
    /// [horizon][hidden]
    w2: Array2<f64>,
    b2: Array1<f64>,
}

impl MlpModel {
    pub fn from_parts(
        spec: ModelSpec,
        w1: Array2<f64>,
        b1: Array1<f64>,
        w2: Array2<f64>,
        b2: Array1<f64>,
    ) -> Result<Self> {
        let hidden = b1.len();
        if w1.dim() != (hidden, spec.input_len())
            || w2.dim() != (spec.horizon, hidden)
            || b2.len() != spec.horizon
        {
            return Err(Error::Config(format!(
                "inconsistent MLP shapes: w1 {:?}, b1 {}, w2 {:?}, b2 {}",
                w1.dim(),
                b1.len(),
                w2.dim(),
                b2.len()
            )));
        }
        if w1.iter()
            .chain(w2.iter())
            .chain(b1.iter())
            .chain(b2.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("MLP parameters must be finite".into()));
        }
        Ok(Self { spec, w1, b1, w2, b2 })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn hidden_width(&self) -> usize {
        self.b1.len()
    }

    pub fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        validate_input(&self.spec, input)?;
        let x = flatten(input);
        let mut a1 = self.w1.dot(&x) + &self.b1;
        a1.mapv_inplace(f64::tanh);
        Ok(self.w2.dot(&a1) + &self.b2)
    }

    pub(super) fn to_saved(&self) -> SavedModel {
        SavedModel::Mlp {
            lookback: self.spec.lookback,
            horizon: self.spec.horizon,
            k: self.spec.k,
            hidden_width: self.hidden_width(),
            w1: self.w1.iter().copied().collect(),
            b1: self.b1.to_vec(),
            w2: self.w2.iter().copied().collect(),
            b2: self.b2.to_vec(),
        }
    }

    pub(super) fn from_saved(saved: SavedModel) -> Result<Self> {
        match saved {
            SavedModel::Mlp {
                lookback,
                horizon,
                k,
                hidden_width,
                w1,
                b1,
                w2,
                b2,
            } => {
                let spec = ModelSpec { lookback, horizon, k };
                let w1 = Array2::from_shape_vec((hidden_width, spec.input_len()), w1)
                    .map_err(|e| Error::Config(format!("bad w1 shape: {e}")))?;
                let w2 = Array2::from_shape_vec((horizon, hidden_width), w2)
                    .map_err(|e| Error::Config(format!("bad w2 shape: {e}")))?;
                Self::from_parts(spec, w1, Array1::from(b1), w2, Array1::from(b2))
            }
            _ => Err(Error::Config("saved model is not an MLP".into())),
        }
    }
}

impl super::Forecaster for MlpModel {
    fn spec(&self) -> ModelSpec {
        self.spec
    }

    fn predict(&self, input: &Array2<f64>) -> Result<Array1<f64>> {
        MlpModel::predict(self, input)
    }
}

pub(super) fn train_mlp(windows: &WindowSet, config: &TrainConfig) -> Result<MlpModel> {
    if config.hidden_width < 1 {
        return Err(Error::Config("hidden width must be >= 1".into()));
    }
    let spec = ModelSpec {
        lookback: windows.lookback(),
        horizon: windows.horizon(),
        k: windows.k(),
    };
    let input_len = spec.input_len();
    let hidden = config.hidden_width;
    let horizon = spec.horizon;

    let data: Vec<(Array1<f64>, Array1<f64>)> = windows
        .windows()
        .iter()
        .map(|w| (flatten(&w.input), w.target.clone()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w1 = Array2::from_shape_fn((hidden, input_len), |_| rng.gen_range(-0.05..0.05));
    let mut b1 = Array1::from_shape_fn(hidden, |_| rng.gen_range(-0.05..0.05));
    let mut w2 = Array2::from_shape_fn((horizon, hidden), |_| rng.gen_range(-0.05..0.05));
    let mut b2 = Array1::from_shape_fn(horizon, |_| rng.gen_range(-0.05..0.05));

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut g_w1 = Array2::<f64>::zeros((hidden, input_len));
    let mut g_b1 = Array1::<f64>::zeros(hidden);
    let mut g_w2 = Array2::<f64>::zeros((horizon, hidden));
    let mut g_b2 = Array1::<f64>::zeros(horizon);

    for epoch in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            g_w1.fill(0.0);
            g_b1.fill(0.0);
            g_w2.fill(0.0);
            g_b2.fill(0.0);
            let scale = 2.0 / (horizon as f64 * batch.len() as f64);
            for &wi in batch {
                let (x, y) = &data[wi];
                let mut a1 = w1.dot(x) + &b1;
                a1.mapv_inplace(f64::tanh);
                let pred = w2.dot(&a1) + &b2;

                let mut d_pred = Array1::<f64>::zeros(horizon);
                for h in 0..horizon {
                    let r = pred[h] - y[h];
                    epoch_loss += r * r;
                    d_pred[h] = scale * r;
                }
                for h in 0..horizon {
                    let g = d_pred[h];
                    let mut row = g_w2.row_mut(h);
                    for j in 0..hidden {
                        row[j] += g * a1[j];
                    }
                    g_b2[h] += g;
                }
                // d a1 = W2^T d_pred; d z1 = d a1 * (1 - a1^2)
                let d_a1 = w2.t().dot(&d_pred);
                for j in 0..hidden {
                    let dz = d_a1[j] * (1.0 - a1[j] * a1[j]);
                    g_b1[j] += dz;
                    let mut row = g_w1.row_mut(j);
                    for i in 0..input_len {
                        row[i] += dz * x[i];
                    }
                }
            }
            if config.l2 > 0.0 {
                g_w1.scaled_add(2.0 * config.l2, &w1);
                g_w2.scaled_add(2.0 * config.l2, &w2);
            }
            w1.scaled_add(-config.learning_rate, &g_w1);
            b1.scaled_add(-config.learning_rate, &g_b1);
            w2.scaled_add(-config.learning_rate, &g_w2);
            b2.scaled_add(-config.learning_rate, &g_b2);
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss at epoch {epoch}; lower the learning rate"
            )));
        }
    }

    MlpModel::from_parts(spec, w1, b1, w2, b2)
        .map_err(|e| Error::Training(format!("training produced invalid parameters: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{train, training_mse, BuiltinKind, ForecastModel};
    use crate::panel::{make_windows, synth_generate, SynthConfig};

    fn static_linear_windows(seed: u64) -> crate::panel::WindowSet {
        let (panel, _) = synth_generate(&SynthConfig {
            entities: 30,
            days: 10,
            k: 2,
            weights: vec![1.0, 0.5],
            noise_sd: 0.0,
            seed,
            static_count: 2,
        })
        .unwrap();
        make_windows(&panel, 3, 2).unwrap()
    }

    #[test]
    fn learns_static_linear_signal() {
        let windows = static_linear_windows(21);
        let config = TrainConfig {
            epochs: 400,
            learning_rate: 0.05,
            batch_size: 32,
            hidden_width: 12,
            seed: 2,
            ..TrainConfig::default()
        };
        let model = train(BuiltinKind::Mlp, &windows, &config).unwrap();
        let mse = training_mse(&model, &windows).unwrap();
        // Target variance is 1.25; the fit must explain most of it.
        assert!(mse < 0.05, "mse = {mse}");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let windows = static_linear_windows(22);
        let config = TrainConfig {
            epochs: 40,
            hidden_width: 8,
            seed: 3,
            ..TrainConfig::default()
        };
        let m1 = train(BuiltinKind::Mlp, &windows, &config).unwrap();
        let m2 = train(BuiltinKind::Mlp, &windows, &config).unwrap();
        match (m1, m2) {
            (ForecastModel::Mlp(a), ForecastModel::Mlp(b)) => assert_eq!(a, b),
            _ => unreachable!(),
        }
    }

    #[test]
    fn divergence_names_the_epoch() {
        let windows = static_linear_windows(23);
        let config = TrainConfig {
            epochs: 50,
            learning_rate: 1e12,
            hidden_width: 8,
            ..TrainConfig::default()
        };
        // A huge learning rate blows the linear model up; the MLP saturates
        // tanh instead, so test divergence on the linear trainer.
        let err = train(BuiltinKind::LinearDecomp, &windows, &TrainConfig {
            moving_average_kernel: 3,
            ..config
        })
        .unwrap_err();
        match err {
            Error::Training(msg) => assert!(msg.contains("epoch"), "{msg}"),
            other => panic!("expected training error, got {other}"),
        }
    }

    #[test]
    fn predict_matches_manual_forward_pass() {
        let spec = ModelSpec { lookback: 2, horizon: 1, k: 1 };
        let w1 = Array2::from_shape_vec((2, 2), vec![0.5, -0.25, 0.1, 0.3]).unwrap();
        let b1 = Array1::from(vec![0.01, -0.02]);
        let w2 = Array2::from_shape_vec((1, 2), vec![1.5, -0.5]).unwrap();
        let b2 = Array1::from(vec![0.1]);
        let model = MlpModel::from_parts(spec, w1, b1, w2, b2).unwrap();
        let input = ndarray::array![[0.2], [-0.4]];
        let out = model.predict(&input).unwrap();
        let h1 = (0.5f64 * 0.2 + (-0.25) * (-0.4) + 0.01).tanh();
        let h2 = (0.1f64 * 0.2 + 0.3 * (-0.4) - 0.02).tanh();
        let expected = 1.5 * h1 - 0.5 * h2 + 0.1;
        assert!((out[0] - expected).abs() < 1e-15);
    }
}
