//! Complex baseband waveforms: constellations, root-raised-cosine shaping,
//! matched filtering and FFT resampling.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampled complex baseband signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub symbol_rate: f64,
    /// Length of the zero-symbol guard at each end, in samples.
    pub guard_samples: usize,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, symbol_rate: f64) -> Result<Self> {
        let s = Self {
            samples,
            sample_rate,
            symbol_rate,
            guard_samples: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.symbol_rate > 0.0) {
            return Err(Error::InvalidArgument("rates must be positive".into()));
        }
        if self.oversampling() < 2.0 - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "oversampling {} is below 2",
                self.oversampling()
            )));
        }
        if self
            .samples
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("signal samples".into()));
        }
        Ok(())
    }

    pub fn oversampling(&self) -> f64 {
        self.sample_rate / self.symbol_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            ..self.clone()
        }
    }
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Normalized mean squared error `|a - b|^2 / |b|^2` in dB.
pub fn nmse_db(estimate: &[Complex64], reference: &[Complex64]) -> f64 {
    let err: f64 = estimate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    10.0 * (err / energy(reference)).log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Self::Qpsk),
            "16qam" | "qam16" => Ok(Self::Qam16),
            _ => Err(Error::InvalidArgument(format!(
                "unsupported modulation {s:?}"
            ))),
        }
    }
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Self::Qpsk => 4,
            Self::Qam16 => 16,
        }
    }

    fn levels(self) -> (usize, f64) {
        // per-axis level count and the scale giving unit average power
        match self {
            Self::Qpsk => (2, 0.5f64.sqrt()),
            Self::Qam16 => (4, 0.1f64.sqrt()),
        }
    }

    /// Constellation point of symbol index `i` (unit average power).
    pub fn point(self, i: usize) -> Complex64 {
        let (m, scale) = self.levels();
        let level = |k: usize| (2.0 * k as f64 - (m as f64 - 1.0)) * scale;
        Complex64::new(level(i % m), level(i / m))
    }

    /// Index of the nearest constellation point.
    pub fn decide(self, z: Complex64) -> usize {
        let (m, scale) = self.levels();
        let axis = |x: f64| {
            let k = ((x / scale + (m as f64 - 1.0)) / 2.0).round();
            k.clamp(0.0, (m - 1) as f64) as usize
        };
        axis(z.re) + m * axis(z.im)
    }

    pub fn random_indices(self, n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
        (0..n).map(|_| rng.random_range(0..self.order())).collect()
    }
}

/// Root-raised-cosine taps spanning `span_symbols` symbols on each side,
/// scaled so that the squared taps sum to `sps`.
pub fn rrc_taps(rolloff: f64, sps: usize, span_symbols: usize) -> Vec<f64> {
    let half = span_symbols * sps;
    let b = rolloff;
    let mut h: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let t = (i as f64 - half as f64) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / std::f64::consts::PI
            } else if b > 0.0 && ((4.0 * b * t).abs() - 1.0).abs() < 1e-9 {
                let pi4b = std::f64::consts::PI / (4.0 * b);
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / std::f64::consts::PI) * pi4b.sin()
                        + (1.0 - 2.0 / std::f64::consts::PI) * pi4b.cos())
            } else {
                let pt = std::f64::consts::PI * t;
                ((pt * (1.0 - b)).sin() + 4.0 * b * t * (pt * (1.0 + b)).cos())
                    / (pt * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let norm = (sps as f64 / h.iter().map(|x| x * x).sum::<f64>()).sqrt();
    h.iter_mut().for_each(|x| *x *= norm);
    h
}

/// Centered linear convolution with real taps: `y[n] = sum_k h[k] x[n + c - k]`
/// with `c = (len(h) - 1) / 2` and zeros outside `x`.
pub fn convolve_real_same(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let n = x.len() as isize;
    let c = (h.len() as isize - 1) / 2;
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &hk) in h.iter().enumerate() {
                let j = i + c - k as isize;
                if (0..n).contains(&j) {
                    acc += x[j as usize] * hk;
                }
            }
            acc
        })
        .collect()
}

/// Transmitter and matched-filter receiver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub modulation: Modulation,
    pub rolloff: f64,
    /// RRC truncation, symbols on each side of the peak.
    pub span_symbols: usize,
    /// Zero symbols before and after the payload.
    pub guard_symbols: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            modulation: Modulation::Qam16,
            rolloff: 0.1,
            span_symbols: 32,
            guard_symbols: 96,
        }
    }
}

/// Shapes `symbols` (with guards added) into a waveform at `oversampling`
/// samples per symbol. Unit-power symbols give unit average power.
pub fn generate_waveform(
    symbols: &[Complex64],
    pulse: &PulseConfig,
    symbol_rate: f64,
    oversampling: usize,
) -> Result<ComplexSignal> {
    if oversampling < 2 {
        return Err(Error::InvalidArgument(
            "oversampling must be at least 2".into(),
        ));
    }
    let total = symbols.len() + 2 * pulse.guard_symbols;
    let mut up = vec![Complex64::new(0.0, 0.0); total * oversampling];
    for (k, &s) in symbols.iter().enumerate() {
        up[(pulse.guard_symbols + k) * oversampling] = s;
    }
    let h = rrc_taps(pulse.rolloff, oversampling, pulse.span_symbols);
    let mut sig = ComplexSignal::new(
        convolve_real_same(&up, &h),
        symbol_rate * oversampling as f64,
        symbol_rate,
    )?;
    sig.guard_samples = pulse.guard_symbols * oversampling;
    Ok(sig)
}

/// Draws `n` random symbols and shapes them. Returns the symbol indices,
/// the symbols, and the waveform.
pub fn random_burst(
    pulse: &PulseConfig,
    n: usize,
    symbol_rate: f64,
    oversampling: usize,
    rng: &mut impl rand::Rng,
) -> Result<(Vec<usize>, Vec<Complex64>, ComplexSignal)> {
    let idx = pulse.modulation.random_indices(n, rng);
    let symbols: Vec<Complex64> = idx.iter().map(|&i| pulse.modulation.point(i)).collect();
    let sig = generate_waveform(&symbols, pulse, symbol_rate, oversampling)?;
    Ok((idx, symbols, sig))
}

/// Matched filter at the signal's integer oversampling, then sampling at
/// the `num_symbols` payload symbol instants.
pub fn matched_filter(
    signal: &ComplexSignal,
    pulse: &PulseConfig,
    num_symbols: usize,
) -> Result<Vec<Complex64>> {
    let sps = integer_sps(signal)?;
    let h = matched_taps(pulse, sps);
    let filtered = convolve_real_same(&signal.samples, &h);
    sample_symbols(&filtered, pulse, sps, num_symbols)
}

pub(crate) fn integer_sps(signal: &ComplexSignal) -> Result<usize> {
    let os = signal.oversampling();
    let sps = os.round() as usize;
    if (os - sps as f64).abs() > 1e-9 || sps < 2 {
        return Err(Error::InvalidArgument(format!(
            "matched filtering needs an integer oversampling, got {os}"
        )));
    }
    Ok(sps)
}

/// RRC taps divided by `sps`, so the cascade has unit gain at symbol instants.
pub(crate) fn matched_taps(pulse: &PulseConfig, sps: usize) -> Vec<f64> {
    rrc_taps(pulse.rolloff, sps, pulse.span_symbols)
        .into_iter()
        .map(|x| x / sps as f64)
        .collect()
}

pub(crate) fn sample_symbols(
    filtered: &[Complex64],
    pulse: &PulseConfig,
    sps: usize,
    num_symbols: usize,
) -> Result<Vec<Complex64>> {
    let start = pulse.guard_symbols * sps;
    let end = start + num_symbols * sps;
    if end > filtered.len() {
        return Err(Error::ShapeMismatch(
            "signal shorter than the payload".into(),
        ));
    }
    Ok((0..num_symbols)
        .map(|k| filtered[start + k * sps])
        .collect())
}

/// Forward/inverse FFT pair of one size. The inverse is unnormalized.
#[derive(Clone)]
pub(crate) struct FftPair {
    pub fwd: Arc<dyn Fft<f64>>,
    pub inv: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }
}

/// Angular frequency of each FFT bin for `n` samples at rate `fs`.
pub(crate) fn omega_grid(n: usize, fs: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n as f64
            };
            2.0 * std::f64::consts::PI * k * fs / n as f64
        })
        .collect()
}

/// Band-limited resampling to `new_len` samples by truncating or
/// zero-padding the spectrum; the new sample rate scales accordingly. When
/// shrinking, the bin at the new Nyquist frequency is dropped.
pub fn resample_fft(signal: &ComplexSignal, new_len: usize) -> Result<ComplexSignal> {
    let n = signal.len();
    if n == 0 || new_len == 0 {
        return Err(Error::InvalidArgument(
            "cannot resample an empty signal".into(),
        ));
    }
    let mut spec = signal.samples.clone();
    FftPair::new(n).fwd.process(&mut spec);
    let mut out = vec![Complex64::new(0.0, 0.0); new_len];
    let keep = n.min(new_len);
    // strictly below Nyquist of the smaller grid
    let half = (keep - 1) / 2;
    out[..=half].copy_from_slice(&spec[..=half]);
    for k in 1..=half {
        out[new_len - k] = spec[n - k];
    }
    FftPair::new(new_len).inv.process(&mut out);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|z| *z *= scale);
    let ratio = new_len as f64 / n as f64;
    let mut sig = ComplexSignal::new(out, signal.sample_rate * ratio, signal.symbol_rate)?;
    sig.guard_samples = (signal.guard_samples as f64 * ratio).floor() as usize;
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constellations_have_unit_power() {
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let p: f64 =
                (0..m.order()).map(|i| m.point(i).norm_sqr()).sum::<f64>() / m.order() as f64;
            assert!((p - 1.0).abs() < 1e-15);
            for i in 0..m.order() {
                assert_eq!(m.decide(m.point(i) * 1.1), i);
            }
        }
    }

    #[test]
    fn rrc_energy_normalization() {
        let h = rrc_taps(0.1, 4, 16);
        let e: f64 = h.iter().map(|x| x * x).sum();
        assert!((e - 4.0).abs() < 1e-12);
        // symmetric
        for k in 0..h.len() {
            assert_eq!(h[k], h[h.len() - 1 - k]);
        }
    }
}
