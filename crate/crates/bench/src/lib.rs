//! Shared fixtures for the engine benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sabench_core::{
    make_windows, synth_generate, FeatureStats, LinearDecompModel, MlpModel, ModelSpec, Panel,
    SynthConfig, WindowSet,
};

/// Synthetic panel with `entities` entities, 8 features, fixed geometry.
pub fn panel(entities: usize, days: usize) -> Panel {
    let (panel, _) = synth_generate(&SynthConfig {
        entities,
        days,
        k: 8,
        weights: (1..=8).rev().map(|w| w as f64).collect(),
        noise_sd: 0.1,
        seed: 42,
        static_count: 8,
    })
    .expect("synthetic panel");
    panel
}

pub fn fixture(entities: usize) -> (WindowSet, FeatureStats) {
    let panel = panel(entities, 36);
    let stats = panel.feature_stats();
    let windows = make_windows(&panel, 13, 15).expect("windows");
    (windows, stats)
}

/// Hand-assembled linear forecaster over the 13 x 8 geometry.
pub fn linear_model() -> LinearDecompModel {
    let spec = ModelSpec {
        lookback: 13,
        horizon: 15,
        k: 8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w_trend = Array2::from_shape_fn((15, 13 * 8), |_| rng.gen_range(-0.1..0.1));
    let w_seasonal = Array2::from_shape_fn((15, 13 * 8), |_| rng.gen_range(-0.1..0.1));
    LinearDecompModel::from_parts(spec, 5, w_trend, w_seasonal).expect("model")
}

/// Seeded tanh MLP over the same geometry.
pub fn mlp_model() -> MlpModel {
    let spec = ModelSpec {
        lookback: 13,
        horizon: 15,
        k: 8,
    };
    let hidden = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w1 = Array2::from_shape_fn((hidden, spec.input_len()), |_| rng.gen_range(-0.05..0.05));
    let b1 = ndarray::Array1::from_shape_fn(hidden, |_| rng.gen_range(-0.05..0.05));
    let w2 = Array2::from_shape_fn((spec.horizon, hidden), |_| rng.gen_range(-0.5..0.5));
    let b2 = ndarray::Array1::from_shape_fn(spec.horizon, |_| rng.gen_range(-0.05..0.05));
    MlpModel::from_parts(spec, w1, b1, w2, b2).expect("model")
}
