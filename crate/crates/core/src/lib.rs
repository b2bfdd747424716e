//! Trainable message-passing decoders for binary linear codes and learned
//! digital backpropagation for optical fiber links.
//!
//! * [`codes`] builds parity-check matrices and Tanner graphs.
//! * [`channel`] simulates BPSK over AWGN.
//! * [`wbp`] is the weighted, damped belief-propagation decoder.
//! * [`grad`] computes exact gradients through the decoder and the filter chain.
//! * [`train`] holds losses, optimizers and the decoder training loop.
//! * [`ldbp`] simulates fiber propagation and trains per-step FIR filters.
//! * [`sim`] runs Monte-Carlo error-rate measurements.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codes;
mod error;
pub mod grad;
pub mod ldbp;
pub mod rng;
pub mod sim;
pub mod train;
pub mod wbp;

pub use error::{Error, Result};
