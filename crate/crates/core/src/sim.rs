//! Monte-Carlo bit and frame error rates with Wilson confidence intervals.
//!
//! Every frame has its own seed derived from the row seed and the frame
//! index, so a row is reproduced exactly by rerunning with its seed.

use serde::{Deserialize, Serialize};

use crate::channel::{channel_llr, noise_variance, transmit_with_variance};
use crate::codes::{Encoder, TannerGraph};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::train::DataSource;
use crate::wbp::{decode, rrd_decode, Automorphisms, RrdConfig, WeightSet, LLR_CLIP};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingRule {
    pub min_bit_errors: u64,
    pub max_frames: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_bit_errors: 300,
            max_frames: 1_000_000,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_bit_errors == 0 || self.max_frames == 0 {
            return Err(Error::InvalidArgument(
                "stopping rule needs min_bit_errors >= 1 and max_frames >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// How received frames are decoded.
#[derive(Clone, Debug, PartialEq)]
pub enum Decoder {
    Wbp(WeightSet),
    /// Random redundant decoding; the automorphism stream of each frame is
    /// derived from the frame seed.
    Rrd {
        weights: WeightSet,
        config: RrdConfig,
    },
}

impl Decoder {
    pub fn decide(&self, llr: &[f64], graph: &TannerGraph, frame_seed: u64) -> Result<Vec<u8>> {
        match self {
            Self::Wbp(w) => Ok(decode(llr, graph, w)?.hard_decision),
            Self::Rrd { weights, config } => {
                let mut config = config.clone();
                if let Automorphisms::Random { .. } = config.automorphisms {
                    config.automorphisms = Automorphisms::Random {
                        seed: derive_seed(frame_seed, 1),
                    };
                }
                Ok(rrd_decode(llr, graph, weights, &config)?.hard_decision)
            }
        }
    }

    pub fn total_iterations(&self) -> usize {
        match self {
            Self::Wbp(w) => w.iterations(),
            Self::Rrd { config, .. } => config.total_iterations(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerConfig {
    pub stopping: StoppingRule,
    pub data_source: DataSource,
    /// Replace the channel by a noiseless one with saturated LLRs.
    pub zero_noise: bool,
}

/// One measured operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub seed: u64,
}

impl BerPoint {
    /// Whether the two BER confidence intervals are disjoint.
    pub fn separated_from(&self, other: &BerPoint) -> bool {
        self.ci95_high < other.ci95_low || other.ci95_high < self.ci95_low
    }
}

/// Channel LLRs of frame `index` in the row keyed by `seed`.
pub fn frame_llrs(
    encoder: &Encoder,
    ebn0_db: f64,
    cfg: &BerConfig,
    seed: u64,
    index: u64,
) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut rng = seeded(derive_seed(seed, index), 0);
    let bits = match cfg.data_source {
        DataSource::RandomCodewords => encoder.random_codeword(&mut rng),
        DataSource::AllZero => vec![0; encoder.length()],
    };
    if cfg.zero_noise {
        let llr = bits
            .iter()
            .map(|&b| if b == 0 { LLR_CLIP } else { -LLR_CLIP })
            .collect();
        return Ok((bits, llr));
    }
    let variance = noise_variance(ebn0_db, encoder.rate())?;
    let frame = transmit_with_variance(&bits, variance, &mut rng);
    Ok((bits, channel_llr(&frame)?))
}

/// Simulates frames at `ebn0_db` until the stopping rule fires.
pub fn ber_point(
    graph: &TannerGraph,
    encoder: &Encoder,
    decoder: &Decoder,
    ebn0_db: f64,
    cfg: &BerConfig,
    seed: u64,
) -> Result<BerPoint> {
    cfg.stopping.validate()?;
    if encoder.length() != graph.num_vars() {
        return Err(Error::ShapeMismatch(
            "encoder and graph lengths differ".into(),
        ));
    }
    let n = encoder.length() as u64;
    let (mut frames, mut bit_errors, mut frame_errors) = (0u64, 0u64, 0u64);
    while frames < cfg.stopping.max_frames && bit_errors < cfg.stopping.min_bit_errors {
        let (bits, llr) = frame_llrs(encoder, ebn0_db, cfg, seed, frames)?;
        let hard = decoder.decide(&llr, graph, derive_seed(seed, frames))?;
        let errors = bits.iter().zip(&hard).filter(|(a, b)| a != b).count() as u64;
        bit_errors += errors;
        frame_errors += u64::from(errors > 0);
        frames += 1;
    }
    let bits = frames * n;
    let (ci95_low, ci95_high) = wilson_interval(bit_errors, bits, Z95);
    log::debug!("Eb/N0 {ebn0_db} dB: {bit_errors} bit errors in {frames} frames");
    Ok(BerPoint {
        ebn0_db,
        frames,
        bits,
        bit_errors,
        frame_errors,
        ber: bit_errors as f64 / bits as f64,
        fer: frame_errors as f64 / frames as f64,
        ci95_low,
        ci95_high,
        seed,
    })
}

/// One row per Eb/N0 value; row `i` uses seed `derive_seed(seed, i)`.
pub fn ber_sweep(
    graph: &TannerGraph,
    encoder: &Encoder,
    decoder: &Decoder,
    ebn0_grid_db: &[f64],
    cfg: &BerConfig,
    seed: u64,
) -> Result<Vec<BerPoint>> {
    if ebn0_grid_db.is_empty() {
        return Err(Error::InvalidArgument("empty Eb/N0 grid".into()));
    }
    if ebn0_grid_db.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("Eb/N0 grid must be sorted".into()));
    }
    ebn0_grid_db
        .iter()
        .enumerate()
        .map(|(i, &e)| ber_point(graph, encoder, decoder, e, cfg, derive_seed(seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_993_498_206_985_7).abs() < 1e-12, "{hi}");
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(
            (lo - 0.403_831_530_365_995_6).abs() < 1e-12
                && (hi - 0.596_168_469_634_004_4).abs() < 1e-12
        );
        assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
    }
}
