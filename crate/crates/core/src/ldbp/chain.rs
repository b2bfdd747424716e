//! The time-domain backpropagation chain: per step, a fixed nonlinear phase
//! rotation followed by a short FIR filter.

use num_complex::Complex64;

use super::fiber::FiberParams;
use super::filters::{design_fir, FilterBank, FirDesign};
use super::signal::ComplexSignal;
use crate::error::{Error, Result};

/// Effective SNR reported for error-free recovery, in dB.
pub const SNR_CAP_DB: f64 = 80.0;

/// Nonlinear phase coefficients of the `num_spans * steps_per_span`
/// backpropagation steps, in processing order, for a signal at the received
/// power level. The filters carry no gain, so attenuation is folded in here.
pub fn nl_phase_for_link(fiber: &FiberParams, steps_per_span: usize) -> Vec<f64> {
    let m = steps_per_span;
    let d = fiber.span_length / m as f64;
    let d_eff = fiber.effective_length(d);
    let total = fiber.total_length();
    (0..fiber.num_spans * m)
        .map(|j| {
            let span = fiber.num_spans - 1 - j / m;
            let seg = m - 1 - j % m;
            let end = (seg + 1) as f64 * d;
            let power_ratio = match fiber.amplification {
                super::fiber::Amplification::Off => {
                    (fiber.alpha * (total - span as f64 * fiber.span_length - end)).exp()
                }
                _ => (-fiber.alpha * end).exp(),
            };
            -fiber.gamma_nl * d_eff * power_ratio
        })
        .collect()
}

impl FilterBank {
    /// Every step filtered by the same designed FIR.
    pub fn for_link(
        fiber: &FiberParams,
        steps_per_span: usize,
        sample_rate: f64,
        design: &FirDesign,
        symmetric: bool,
    ) -> Result<Self> {
        if steps_per_span == 0 {
            return Err(Error::InvalidArgument(
                "need at least one step per span".into(),
            ));
        }
        let d = fiber.span_length / steps_per_span as f64;
        let taps = design_fir(design, d, fiber.beta2, sample_rate)?;
        Self::repeated(taps, nl_phase_for_link(fiber, steps_per_span), symmetric)
    }
}

/// Centered same-length convolution with complex taps and zero padding:
/// `y[n] = sum_k h[k] x[n + c - k]`.
pub(crate) fn convolve_same(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() as isize;
    let c = (h.len() as isize - 1) / 2;
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for (k, &hk) in h.iter().enumerate() {
        let shift = c - k as isize;
        let lo = (-shift).max(0);
        let hi = (n - shift).min(n);
        for i in lo..hi {
            y[i as usize] += hk * x[(i + shift) as usize];
        }
    }
    y
}

#[inline]
pub(crate) fn rotate(x: &mut [Complex64], phi: f64) {
    for z in x.iter_mut() {
        *z *= Complex64::from_polar(1.0, phi * z.norm_sqr());
    }
}

/// Intermediate signals of one chain evaluation, kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct LdbpTape {
    /// Input of each step's rotation.
    pub rotation_inputs: Vec<Vec<Complex64>>,
    /// Input of each step's filter.
    pub filter_inputs: Vec<Vec<Complex64>>,
}

/// Runs the chain on raw samples, optionally recording a tape.
pub fn ldbp_forward(
    samples: &[Complex64],
    bank: &FilterBank,
    mut tape: Option<&mut LdbpTape>,
) -> Vec<Complex64> {
    let mut x = samples.to_vec();
    for (taps, &phi) in bank.taps.iter().zip(&bank.nl_phase) {
        if let Some(t) = tape.as_deref_mut() {
            t.rotation_inputs.push(x.clone());
        }
        rotate(&mut x, phi);
        if let Some(t) = tape.as_deref_mut() {
            t.filter_inputs.push(x.clone());
        }
        x = convolve_same(&x, taps);
    }
    x
}

/// Applies the filter bank to `y`.
pub fn ldbp_apply(y: &ComplexSignal, bank: &FilterBank) -> Result<ComplexSignal> {
    bank.validate()?;
    y.validate()?;
    Ok(y.with_samples(ldbp_forward(&y.samples, bank, None)))
}

/// Least-squares complex gain `a` minimizing `sum |a x - s|^2`.
pub fn ls_gain(recovered: &[Complex64], transmitted: &[Complex64]) -> Result<Complex64> {
    if recovered.len() != transmitted.len() || recovered.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} recovered vs {} transmitted symbols",
            recovered.len(),
            transmitted.len()
        )));
    }
    let num: Complex64 = recovered
        .iter()
        .zip(transmitted)
        .map(|(x, s)| x.conj() * s)
        .sum();
    let den: f64 = recovered.iter().map(|x| x.norm_sqr()).sum();
    if !(den > 0.0) || transmitted.iter().all(|s| s.norm_sqr() == 0.0) {
        return Err(Error::InvalidArgument("degenerate all-zero symbols".into()));
    }
    Ok(num / den)
}

/// `E|s|^2 / E|a x - s|^2` in dB after least-squares gain normalization,
/// capped at [`SNR_CAP_DB`].
pub fn effective_snr_db(recovered: &[Complex64], transmitted: &[Complex64]) -> Result<f64> {
    let a = ls_gain(recovered, transmitted)?;
    let signal: f64 = transmitted.iter().map(|s| s.norm_sqr()).sum();
    let error: f64 = recovered
        .iter()
        .zip(transmitted)
        .map(|(x, s)| (a * x - s).norm_sqr())
        .sum();
    if error <= signal * 10f64.powf(-SNR_CAP_DB / 10.0) {
        return Ok(SNR_CAP_DB);
    }
    Ok(10.0 * (signal / error).log10())
}

/// Mean squared error after gain normalization, and its Wirtinger adjoint
/// `2 dL/d(conj x)` with respect to the recovered symbols (the gain is held
/// at its optimum, which is exact because the loss is stationary in it).
pub fn normalized_mse(
    recovered: &[Complex64],
    transmitted: &[Complex64],
) -> Result<(f64, Vec<Complex64>)> {
    let a = ls_gain(recovered, transmitted)?;
    let k = recovered.len() as f64;
    let mut loss = 0.0;
    let adj = recovered
        .iter()
        .zip(transmitted)
        .map(|(x, s)| {
            let e = a * x - s;
            loss += e.norm_sqr();
            a.conj() * e * (2.0 / k)
        })
        .collect();
    Ok((loss / k, adj))
}
