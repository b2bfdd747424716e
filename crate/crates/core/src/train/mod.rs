//! Losses, optimizers, gradient clipping and the decoder training loop.

mod checkpoint;
mod config;
mod data;
mod decoder;
mod loss;
mod optim;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
pub use config::TrainConfig;
pub use data::{draw_frame, frame_batch, indexed_frame, DataSource, Frame};
pub use decoder::{
    frame_gradient, mean_loss, train_decoder, validation_frames, DecoderObjective, LossRecord,
    TrainOutcome,
};
pub use loss::{
    cross_entropy_loss, loss_and_adjoints, loss_from_llrs, multi_loss, single_loss,
    single_loss_llr, single_loss_ratio_form, LossConfig, LossFunction, CE_FLOOR,
};
pub use optim::{
    clip_gradient, optimizer_step, ClipMode, OptimizerConfig, OptimizerKind, OptimizerState,
};
