//! Fiber propagation by the split-step Fourier method and its digital
//! inverse.
//!
//! Sign convention: one step of length `d` multiplies the spectrum by
//! `exp(+j (beta2 / 2) w^2 d) exp(-alpha d / 2)` and then rotates each sample
//! by `exp(+j gamma d_eff |x|^2)`, where `d_eff = (exp(alpha d) - 1) / alpha`
//! accounts for the higher power earlier in the step (the rotation is applied
//! to the attenuated end-of-step signal). Backpropagation undoes the steps
//! in reverse order, so with matching parameters it inverts a noiseless
//! forward run exactly.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::signal::{omega_grid, ComplexSignal, FftPair};
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const PLANCK: f64 = 6.626_070_15e-34;
/// Optical carrier (1550 nm).
pub const CARRIER_HZ: f64 = 193.41e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Amplification {
    /// Lumped gain at every span end with amplified spontaneous emission.
    Edfa,
    /// Lumped gain without noise.
    Noiseless,
    /// No amplifiers; the signal decays along the link.
    Off,
}

/// Single-polarization fiber link in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberParams {
    /// Group-velocity dispersion, s^2/m.
    pub beta2: f64,
    /// Kerr coefficient, 1/(W m).
    pub gamma_nl: f64,
    /// Power attenuation, 1/m.
    pub alpha: f64,
    pub span_length: f64,
    pub num_spans: usize,
    pub amp_noise_figure_db: f64,
    pub amplification: Amplification,
}

/// dB/km to the power attenuation coefficient in 1/m.
pub fn alpha_from_db_per_km(db_per_km: f64) -> f64 {
    db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3
}

impl Default for FiberParams {
    /// 25 x 80 km of standard single-mode fiber with EDFAs.
    fn default() -> Self {
        Self {
            beta2: -21.7e-27,
            gamma_nl: 1.3e-3,
            alpha: alpha_from_db_per_km(0.2),
            span_length: 80e3,
            num_spans: 25,
            amp_noise_figure_db: 4.5,
            amplification: Amplification::Edfa,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.span_length >= 0.0) || self.num_spans == 0 || !(self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(
                "fiber needs span_length >= 0, num_spans >= 1 and alpha >= 0".into(),
            ));
        }
        if ![self.beta2, self.gamma_nl, self.amp_noise_figure_db]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::NonFinite("fiber parameters".into()));
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.span_length * self.num_spans as f64
    }

    /// Amplifier power gain compensating one span.
    pub fn span_gain(&self) -> f64 {
        (self.alpha * self.span_length).exp()
    }

    /// One-sided ASE power spectral density per amplifier, W/Hz, with
    /// `n_sp = NF / 2`.
    pub fn ase_psd(&self) -> f64 {
        let nf = 10f64.powf(self.amp_noise_figure_db / 10.0);
        nf / 2.0 * PLANCK * CARRIER_HZ * (self.span_gain() - 1.0)
    }

    /// Effective length used by the nonlinear rotation of a step of length `d`.
    pub fn effective_length(&self, d: f64) -> f64 {
        if self.alpha > 0.0 {
            (self.alpha * d).exp_m1() / self.alpha
        } else {
            d
        }
    }

    fn amplified(&self) -> bool {
        self.amplification != Amplification::Off
    }
}

fn validate_steps(steps_per_span: usize) -> Result<()> {
    if steps_per_span == 0 {
        return Err(Error::InvalidArgument(
            "need at least one step per span".into(),
        ));
    }
    Ok(())
}

/// Warns when dispersion spreads a pulse over more than the guard interval.
fn check_guard(x: &ComplexSignal, fiber: &FiberParams) {
    let spread_s =
        fiber.beta2.abs() * fiber.total_length() * 2.0 * std::f64::consts::PI * x.symbol_rate;
    let spread_samples = spread_s * x.sample_rate;
    if spread_samples > x.guard_samples as f64 {
        log::warn!(
            "dispersion spread of {spread_samples:.0} samples exceeds the {}-sample guard; \
             the periodic split-step will wrap",
            x.guard_samples
        );
    }
}

/// Dispersion and attenuation multiplier for one step of signed length `d`,
/// with the inverse-FFT normalization folded in.
fn linear_step(omega: &[f64], fiber: &FiberParams, d: f64, amplitude: f64) -> Vec<Complex64> {
    let n = omega.len() as f64;
    omega
        .iter()
        .map(|w| Complex64::from_polar(amplitude / n, 0.5 * fiber.beta2 * w * w * d))
        .collect()
}

struct Stepper {
    fft: FftPair,
    scratch: Vec<Complex64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        let fft = FftPair::new(n);
        let scratch = vec![
            Complex64::new(0.0, 0.0);
            fft.fwd
                .get_inplace_scratch_len()
                .max(fft.inv.get_inplace_scratch_len())
        ];
        Self { fft, scratch }
    }

    fn filter(&mut self, x: &mut [Complex64], h: &[Complex64]) {
        self.fft.fwd.process_with_scratch(x, &mut self.scratch);
        for (z, &g) in x.iter_mut().zip(h) {
            *z *= g;
        }
        self.fft.inv.process_with_scratch(x, &mut self.scratch);
    }
}

#[inline]
fn rotate(x: &mut [Complex64], phi: f64) {
    for z in x.iter_mut() {
        *z *= Complex64::from_polar(1.0, phi * z.norm_sqr());
    }
}

/// Propagates `x` through the link with `steps_per_span` steps per span.
/// ASE noise (when enabled) is drawn from `seed`.
pub fn ssfm_propagate(
    x: &ComplexSignal,
    fiber: &FiberParams,
    steps_per_span: usize,
    seed: u64,
) -> Result<ComplexSignal> {
    fiber.validate()?;
    validate_steps(steps_per_span)?;
    x.validate()?;
    check_guard(x, fiber);
    let n = x.len();
    let d = fiber.span_length / steps_per_span as f64;
    let omega = omega_grid(n, x.sample_rate);
    let lin = linear_step(&omega, fiber, d, (-0.5 * fiber.alpha * d).exp());
    let phi = fiber.gamma_nl * fiber.effective_length(d);
    let gain = (0.5 * fiber.alpha * fiber.span_length).exp();
    let noise_std = (0.5 * fiber.ase_psd() * x.sample_rate).sqrt();
    let mut rng = seeded(seed, 0);
    let mut stepper = Stepper::new(n);
    let mut y = x.samples.clone();
    for _ in 0..fiber.num_spans {
        for _ in 0..steps_per_span {
            stepper.filter(&mut y, &lin);
            rotate(&mut y, phi);
        }
        if fiber.amplified() {
            for z in y.iter_mut() {
                *z *= gain;
            }
        }
        if fiber.amplification == Amplification::Edfa {
            for z in y.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *z += Complex64::new(re, im) * noise_std;
            }
        }
    }
    Ok(x.with_samples(y))
}

/// Frequency-domain digital backpropagation with `steps_per_span` steps.
pub fn dbp_frequency_domain(
    y: &ComplexSignal,
    fiber: &FiberParams,
    steps_per_span: usize,
) -> Result<ComplexSignal> {
    fiber.validate()?;
    validate_steps(steps_per_span)?;
    y.validate()?;
    let n = y.len();
    let d = fiber.span_length / steps_per_span as f64;
    let omega = omega_grid(n, y.sample_rate);
    let lin = linear_step(&omega, fiber, -d, (0.5 * fiber.alpha * d).exp());
    let phi = -fiber.gamma_nl * fiber.effective_length(d);
    let inv_gain = (-0.5 * fiber.alpha * fiber.span_length).exp();
    let mut stepper = Stepper::new(n);
    let mut x = y.samples.clone();
    for _ in 0..fiber.num_spans {
        if fiber.amplified() {
            for z in x.iter_mut() {
                *z *= inv_gain;
            }
        }
        for _ in 0..steps_per_span {
            rotate(&mut x, phi);
            stepper.filter(&mut x, &lin);
        }
    }
    Ok(y.with_samples(x))
}

/// Linear equalization: one frequency-domain filter inverting the
/// accumulated dispersion (and the net loss when unamplified).
pub fn cd_compensate(y: &ComplexSignal, fiber: &FiberParams) -> Result<ComplexSignal> {
    fiber.validate()?;
    y.validate()?;
    let length = fiber.total_length();
    let amplitude = if fiber.amplified() {
        1.0
    } else {
        (0.5 * fiber.alpha * length).exp()
    };
    let omega = omega_grid(y.len(), y.sample_rate);
    let h = linear_step(&omega, fiber, -length, amplitude);
    let mut x = y.samples.clone();
    Stepper::new(y.len()).filter(&mut x, &h);
    Ok(y.with_samples(x))
}
