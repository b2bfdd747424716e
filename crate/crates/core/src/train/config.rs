//! Decoder training configuration.

use serde::{Deserialize, Serialize};

use super::data::DataSource;
use super::loss::LossConfig;
use super::optim::{ClipMode, OptimizerConfig};
use crate::error::{Error, Result};
use crate::wbp::LLR_CLIP;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub minibatches_per_epoch: usize,
    pub epochs: usize,
    /// Training Eb/N0 is drawn uniformly from this interval (dB).
    pub snr_range_db: (f64, f64),
    pub grad_clip: f64,
    pub clip_mode: ClipMode,
    pub llr_clip: f64,
    pub loss: LossConfig,
    pub data_source: DataSource,
    /// Also learn the damping coefficient(s).
    pub train_damping: bool,
    /// Held-out frames for the before/after comparison; 0 disables it.
    pub validation_frames: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            batch_size: 100,
            minibatches_per_epoch: 1000,
            epochs: 20,
            snr_range_db: (1.0, 6.0),
            grad_clip: 0.1,
            clip_mode: ClipMode::GlobalNorm,
            llr_clip: LLR_CLIP,
            loss: LossConfig::default(),
            data_source: DataSource::RandomCodewords,
            train_damping: false,
            validation_frames: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.batch_size == 0 || self.minibatches_per_epoch == 0 {
            return Err(Error::InvalidArgument(
                "batch and epoch sizes must be at least 1".into(),
            ));
        }
        let (lo, hi) = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "bad SNR range [{lo}, {hi}]"
            )));
        }
        if !(self.grad_clip > 0.0) || !(self.llr_clip > 0.0) {
            return Err(Error::InvalidArgument(
                "clip thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}
