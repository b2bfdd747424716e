//! First-order optimizers and gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::GradientVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Rmsprop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Rmsprop,
            learning_rate: 1e-3,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.rmsprop_decay) || !(self.rmsprop_epsilon >= 0.0) {
            return Err(Error::InvalidArgument(
                "RMSProp needs decay in [0, 1] and a non-negative epsilon".into(),
            ));
        }
        Ok(())
    }
}

/// Running mean of squared gradients (RMSProp only).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerState {
    pub mean_square: Vec<f64>,
}

impl OptimizerState {
    pub fn new(len: usize) -> Self {
        Self {
            mean_square: vec![0.0; len],
        }
    }
}

/// One update of `params` in place.
pub fn optimizer_step(
    params: &mut [f64],
    grad: &GradientVector,
    cfg: &OptimizerConfig,
    state: &mut OptimizerState,
) -> Result<()> {
    if params.len() != grad.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters but {} gradient entries",
            params.len(),
            grad.len()
        )));
    }
    let lr = cfg.learning_rate;
    match cfg.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.iter_mut().zip(grad.values()) {
                *p -= lr * g;
            }
        }
        OptimizerKind::Rmsprop => {
            if state.mean_square.len() != params.len() {
                if state.mean_square.is_empty() {
                    state.mean_square = vec![0.0; params.len()];
                } else {
                    return Err(Error::ShapeMismatch("optimizer state length".into()));
                }
            }
            let rho = cfg.rmsprop_decay;
            for ((p, &g), v) in params
                .iter_mut()
                .zip(grad.values())
                .zip(&mut state.mean_square)
            {
                *v = rho * *v + (1.0 - rho) * g * g;
                *p -= lr * g / (v.sqrt() + cfg.rmsprop_epsilon);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClipMode {
    /// Rescale the whole vector to the threshold norm.
    #[default]
    GlobalNorm,
    /// Clamp each entry to `[-threshold, threshold]`.
    Elementwise,
}

/// Gradient clipping. Norms within a few ulps of the threshold count as
/// already clipped, which makes the operation idempotent.
pub fn clip_gradient(
    grad: &GradientVector,
    threshold: f64,
    mode: ClipMode,
) -> Result<GradientVector> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(
            "clip threshold must be positive".into(),
        ));
    }
    match mode {
        ClipMode::GlobalNorm => {
            let norm = grad.norm();
            if norm > threshold * (1.0 + 8.0 * f64::EPSILON) {
                Ok(grad.scaled(threshold / norm))
            } else {
                Ok(grad.clone())
            }
        }
        ClipMode::Elementwise => grad.map(|g| g.clamp(-threshold, threshold)),
    }
}
