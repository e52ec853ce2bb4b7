use serde::{Deserialize, Serialize};

use crate::decoder::DecoderParams;

/// How the raw gradient is limited before the RMSProp update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// Rescale the whole vector so that its Euclidean norm is at most `c`.
    #[default]
    GlobalNorm,
    /// Clamp each entry to `±c`.
    PerElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub grad_clip: f64,
    #[serde(default)]
    pub clip_mode: ClipMode,
    #[serde(default = "default_decay")]
    pub rms_decay: f64,
    #[serde(default = "default_epsilon")]
    pub rms_epsilon: f64,
    /// Project weights onto `w ≥ 0` after every step.
    #[serde(default = "default_true")]
    pub nonnegative: bool,
}

fn default_decay() -> f64 {
    0.9
}

fn default_epsilon() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

impl RmsPropConfig {
    pub fn new(learning_rate: f64, grad_clip: f64) -> Self {
        Self {
            learning_rate,
            grad_clip,
            clip_mode: ClipMode::GlobalNorm,
            rms_decay: default_decay(),
            rms_epsilon: default_epsilon(),
            nonnegative: true,
        }
    }
}

/// Optimizer state: weights, running squared-gradient averages and the
/// number of steps taken.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: DecoderParams,
    pub rms_accumulators: Vec<f64>,
    pub epoch: usize,
}

impl TrainState {
    pub fn new(params: DecoderParams) -> Self {
        let len = params.edge_weights.len();
        Self {
            params,
            rms_accumulators: vec![0.0; len],
            epoch: 0,
        }
    }
}

/// Returns the clipped copy of `grads`.
pub fn clip_gradient(grads: &[f64], c: f64, mode: ClipMode) -> Vec<f64> {
    match mode {
        ClipMode::GlobalNorm => {
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            let scale = if norm > c { c / norm } else { 1.0 };
            grads.iter().map(|g| g * scale).collect()
        }
        ClipMode::PerElement => grads.iter().map(|g| g.clamp(-c, c)).collect(),
    }
}

/// One RMSProp update:
///
/// ```text
/// g   ← clip(g)
/// acc ← ρ·acc + (1 − ρ)·g²
/// w   ← w − lr · g / √(acc + ε)
/// w   ← max(w, 0)
/// ```
pub fn rmsprop_step(state: &mut TrainState, grads: &[f64], config: &RmsPropConfig) {
    assert_eq!(grads.len(), state.params.edge_weights.len(), "gradient length");
    let g = clip_gradient(grads, config.grad_clip, config.clip_mode);
    let rho = config.rms_decay;
    for ((w, acc), g) in state
        .params
        .edge_weights
        .iter_mut()
        .zip(state.rms_accumulators.iter_mut())
        .zip(&g)
    {
        *acc = rho * *acc + (1.0 - rho) * g * g;
        *w -= config.learning_rate * g / (*acc + config.rms_epsilon).sqrt();
        if config.nonnegative {
            *w = w.max(0.0);
        }
    }
    state.epoch += 1;
}
