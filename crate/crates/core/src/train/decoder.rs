//! The decoder training loop.

use super::config::TrainConfig;
use super::data::{frame_batch, indexed_frame, Frame};
use super::loss::{clamp_pattern, loss_and_adjoints, loss_from_llrs, LossConfig};
use super::optim::{clip_gradient, optimizer_step, OptimizerState};
use crate::codes::{Encoder, TannerGraph};
use crate::error::{Error, Result};
use crate::grad::{decoder_backward, Differentiable, GradientVector};
use crate::rng::derive_seed;
use crate::wbp::{decode, decode_with_trace, WeightSet};

/// Mean decoder loss over a fixed set of frames as a function of the flat
/// parameters of a weight set.
pub struct DecoderObjective<'a> {
    pub graph: &'a TannerGraph,
    pub template: WeightSet,
    pub train_damping: bool,
    pub frames: &'a [Frame],
    pub loss: LossConfig,
}

impl DecoderObjective<'_> {
    fn weights(&self, params: &[f64]) -> Result<WeightSet> {
        let mut w = self.template.clone();
        w.set_params(params, self.train_damping)?;
        Ok(w)
    }
}

impl Differentiable for DecoderObjective<'_> {
    fn num_params(&self) -> usize {
        self.template.num_params(self.train_damping)
    }

    fn value(&self, params: &[f64]) -> Result<f64> {
        let w = self.weights(params)?;
        mean_loss(self.graph, &w, self.frames, self.loss)
    }

    fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, GradientVector)> {
        let w = self.weights(params)?;
        let mut sum_loss = 0.0;
        let mut sum_grad = vec![0.0; self.num_params()];
        for f in self.frames {
            let (loss, grad) = frame_gradient(self.graph, &w, f, self.loss, self.train_damping)?;
            sum_loss += loss;
            for (a, b) in sum_grad.iter_mut().zip(grad.values()) {
                *a += b;
            }
        }
        let scale = 1.0 / self.frames.len() as f64;
        let grad = GradientVector::new(sum_grad.iter().map(|g| g * scale).collect())?;
        Ok((sum_loss * scale, grad))
    }

    fn clip_pattern(&self, params: &[f64]) -> Result<Vec<bool>> {
        let w = self.weights(params)?;
        let mut pattern = Vec::new();
        for f in self.frames {
            let (state, trace) = decode_with_trace(&f.llr, self.graph, &w)?;
            pattern.extend(trace.clipped.iter().flatten().copied());
            pattern.extend(clamp_pattern(&state.output_llrs, self.loss));
        }
        Ok(pattern)
    }
}

/// Loss of one frame and its gradient.
pub fn frame_gradient(
    graph: &TannerGraph,
    weights: &WeightSet,
    frame: &Frame,
    loss: LossConfig,
    train_damping: bool,
) -> Result<(f64, GradientVector)> {
    let (state, trace) = decode_with_trace(&frame.llr, graph, weights)?;
    let (value, adjoints) = loss_and_adjoints(&state.output_llrs, &frame.bits, loss)?;
    let grad = decoder_backward(&frame.llr, graph, weights, &trace, &adjoints, train_damping)?;
    Ok((value, grad))
}

/// Mean loss of `weights` over `frames`.
pub fn mean_loss(
    graph: &TannerGraph,
    weights: &WeightSet,
    frames: &[Frame],
    loss: LossConfig,
) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("no frames to evaluate".into()));
    }
    let mut sum = 0.0;
    for f in frames {
        let state = decode(&f.llr, graph, weights)?;
        sum += loss_from_llrs(&state.output_llrs, &f.bits, loss)?;
    }
    Ok(sum / frames.len() as f64)
}

/// One row of the training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub minibatch: usize,
    pub loss: f64,
    pub grad_norm_preclip: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub weights: WeightSet,
    pub log: Vec<LossRecord>,
    /// Held-out loss before and after training, when enabled.
    pub validation: Option<(f64, f64)>,
}

/// Stream offsets separating training and validation frames.
const TRAIN_STREAM: u64 = 0;
const VALIDATION_STREAM: u64 = 1;

/// Held-out frames used by [`train_decoder`] for `cfg`.
pub fn validation_frames(graph: &TannerGraph, cfg: &TrainConfig) -> Result<Vec<Frame>> {
    let encoder = Encoder::new(&graph.to_matrix());
    frame_batch(
        &encoder,
        cfg.data_source,
        cfg.snr_range_db,
        derive_seed(cfg.seed, VALIDATION_STREAM),
        cfg.validation_frames,
    )
}

/// Trains `initial` on freshly drawn frames. Frames are indexed by their
/// global sample number, gradients are summed in sample order, and the
/// result is bit-identical for identical inputs.
pub fn train_decoder(
    graph: &TannerGraph,
    initial: &WeightSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut weights = initial.clone().with_llr_clip(cfg.llr_clip);
    weights.validate(graph)?;
    let encoder = Encoder::new(&graph.to_matrix());
    let train_seed = derive_seed(cfg.seed, TRAIN_STREAM);
    let validation = if cfg.validation_frames > 0 {
        Some(validation_frames(graph, cfg)?)
    } else {
        None
    };
    let before = match &validation {
        Some(v) => Some(mean_loss(graph, &weights, v, cfg.loss)?),
        None => None,
    };

    let mut params = weights.to_params(cfg.train_damping);
    let mut state = OptimizerState::new(params.len());
    let mut log = Vec::with_capacity(cfg.epochs * cfg.minibatches_per_epoch);
    let mut sample = 0u64;
    for epoch in 0..cfg.epochs {
        for minibatch in 0..cfg.minibatches_per_epoch {
            let mut loss_sum = 0.0;
            let mut grad_sum = vec![0.0; params.len()];
            for _ in 0..cfg.batch_size {
                let frame = indexed_frame(
                    &encoder,
                    cfg.data_source,
                    cfg.snr_range_db,
                    train_seed,
                    sample,
                )?;
                sample += 1;
                let (loss, grad) =
                    frame_gradient(graph, &weights, &frame, cfg.loss, cfg.train_damping)?;
                loss_sum += loss;
                for (a, b) in grad_sum.iter_mut().zip(grad.values()) {
                    *a += b;
                }
            }
            let scale = 1.0 / cfg.batch_size as f64;
            let loss = loss_sum * scale;
            let diverged = || Error::Diverged {
                epoch,
                minibatch,
                loss,
            };
            if !loss.is_finite() {
                return Err(diverged());
            }
            let grad = GradientVector::new(grad_sum.iter().map(|g| g * scale).collect())
                .map_err(|_| diverged())?;
            log.push(LossRecord {
                epoch,
                minibatch,
                loss,
                grad_norm_preclip: grad.norm(),
            });
            let clipped = clip_gradient(&grad, cfg.grad_clip, cfg.clip_mode)?;
            optimizer_step(&mut params, &clipped, &cfg.optimizer, &mut state)?;
            if params.iter().any(|p| !p.is_finite()) {
                return Err(diverged());
            }
            weights.set_params(&params, cfg.train_damping)?;
        }
        if let Some(last) = log.last() {
            log::info!("epoch {epoch}: last minibatch loss {:.6}", last.loss);
        }
    }

    let after = match &validation {
        Some(v) => Some(mean_loss(graph, &weights, v, cfg.loss)?),
        None => None,
    };
    Ok(TrainOutcome {
        weights,
        log,
        validation: before.zip(after),
    })
}
