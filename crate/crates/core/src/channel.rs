//! BPSK over the binary-input AWGN channel.
//!
//! Bit `0` maps to `+1` and bit `1` to `-1`, so a positive LLR favors bit 0.
//! The noise variance per real dimension for code rate `R` and `Eb/N0` in dB
//! is `1 / (2 R 10^(EbN0/10))`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// One transmitted and received block.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFrame {
    pub bits: Vec<u8>,
    pub symbols: Vec<f64>,
    pub observation: Vec<f64>,
    pub noise_variance: f64,
}

pub fn bpsk(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * f64::from(b & 1)).collect()
}

/// Noise variance per real dimension.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !ebn0_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Eb/N0 must be finite, got {ebn0_db}"
        )));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "code rate must lie in (0, 1], got {rate}"
        )));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

/// Transmits `bits` at the given `Eb/N0` and code rate.
pub fn transmit(bits: &[u8], ebn0_db: f64, rate: f64, seed: u64) -> Result<ChannelFrame> {
    let variance = noise_variance(ebn0_db, rate)?;
    let mut rng = seeded(seed, 0);
    Ok(transmit_with_variance(bits, variance, &mut rng))
}

/// Transmits with an explicit noise variance; `0` gives a noiseless frame.
pub fn transmit_with_variance(
    bits: &[u8],
    noise_variance: f64,
    rng: &mut impl rand::Rng,
) -> ChannelFrame {
    let symbols = bpsk(bits);
    let sigma = noise_variance.sqrt();
    let observation = symbols
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(rng);
            s + sigma * z
        })
        .collect();
    ChannelFrame {
        bits: bits.to_vec(),
        symbols,
        observation,
        noise_variance,
    }
}

/// Channel LLRs `2 y / sigma^2`.
pub fn channel_llr(frame: &ChannelFrame) -> Result<Vec<f64>> {
    if !(frame.noise_variance > 0.0) {
        return Err(Error::InvalidArgument(
            "channel LLRs are undefined for zero noise variance".into(),
        ));
    }
    let scale = 2.0 / frame.noise_variance;
    Ok(frame.observation.iter().map(|&y| scale * y).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_convention() {
        let v = noise_variance(4.0, 36.0 / 63.0).unwrap();
        assert!((v - 0.348_343_774_234_310_1).abs() < 1e-12, "{v}");
        assert!(noise_variance(f64::NAN, 0.5).is_err());
        assert!(noise_variance(f64::INFINITY, 0.5).is_err());
        assert!(noise_variance(1.0, 0.0).is_err());
        assert!(noise_variance(1.0, 1.5).is_err());
    }

    #[test]
    fn zero_noise_is_exact() {
        let bits = [0u8, 1, 1, 0];
        let frame = transmit_with_variance(&bits, 0.0, &mut seeded(3, 0));
        assert_eq!(frame.observation, vec![1.0, -1.0, -1.0, 1.0]);
        assert!(channel_llr(&frame).is_err());
    }

    #[test]
    fn llr_formula() {
        let frame = ChannelFrame {
            bits: vec![0, 0],
            symbols: vec![1.0, 1.0],
            observation: vec![0.0, 1.0],
            noise_variance: 0.5,
        };
        assert_eq!(channel_llr(&frame).unwrap(), vec![0.0, 4.0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let bits = vec![0u8; 32];
        assert_eq!(
            transmit(&bits, 2.0, 0.5, 9).unwrap(),
            transmit(&bits, 2.0, 0.5, 9).unwrap()
        );
        assert_ne!(
            transmit(&bits, 2.0, 0.5, 9).unwrap(),
            transmit(&bits, 2.0, 0.5, 10).unwrap()
        );
    }
}
