//! Training and evaluation frames for the decoder.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_llr, noise_variance, transmit_with_variance};
use crate::codes::Encoder;
use crate::error::Result;
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// Encoded uniformly random information words.
    #[default]
    RandomCodewords,
    AllZero,
}

/// A received frame with its transmitted bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub bits: Vec<u8>,
    pub llr: Vec<f64>,
    pub ebn0_db: f64,
}

/// Draws one frame at `ebn0_db`.
pub fn draw_frame(
    encoder: &Encoder,
    source: DataSource,
    ebn0_db: f64,
    rng: &mut impl rand::Rng,
) -> Result<Frame> {
    let bits = match source {
        DataSource::RandomCodewords => encoder.random_codeword(rng),
        DataSource::AllZero => vec![0; encoder.length()],
    };
    let variance = noise_variance(ebn0_db, encoder.rate())?;
    let frame = transmit_with_variance(&bits, variance, rng);
    Ok(Frame {
        llr: channel_llr(&frame)?,
        bits,
        ebn0_db,
    })
}

/// Frame `index` of the stream keyed by `seed`, with Eb/N0 drawn uniformly
/// from `snr_range_db`. Each frame has its own derived seed, so any subset
/// can be regenerated independently.
pub fn indexed_frame(
    encoder: &Encoder,
    source: DataSource,
    snr_range_db: (f64, f64),
    seed: u64,
    index: u64,
) -> Result<Frame> {
    let mut rng = seeded(derive_seed(seed, index), 0);
    let (lo, hi) = snr_range_db;
    let ebn0 = if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    };
    draw_frame(encoder, source, ebn0, &mut rng)
}

/// `count` consecutive indexed frames starting at 0.
pub fn frame_batch(
    encoder: &Encoder,
    source: DataSource,
    snr_range_db: (f64, f64),
    seed: u64,
    count: usize,
) -> Result<Vec<Frame>> {
    (0..count as u64)
        .map(|i| indexed_frame(encoder, source, snr_range_db, seed, i))
        .collect()
}
