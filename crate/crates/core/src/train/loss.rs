//! Decoder losses. Soft outputs `o` are the probability that a bit is 0, so
//! the modified loss of one bit is the probability assigned to the wrong
//! value: `1 - o` for a transmitted 0 and `o` for a transmitted 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wbp::sigmoid;

/// Soft outputs are clamped to `[CE_FLOOR, 1 - CE_FLOOR]` inside the
/// cross-entropy.
pub const CE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFunction {
    /// Soft bit-error surrogate.
    Modified,
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub function: LossFunction,
    /// Average over every iteration's output instead of only the last.
    pub multi: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            function: LossFunction::Modified,
            multi: true,
        }
    }
}

fn check_lengths(n: usize, bits: &[u8]) -> Result<()> {
    if n != bits.len() || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "{n} outputs for {} bits",
            bits.len()
        )));
    }
    Ok(())
}

fn check_open_unit(o: &[f64]) -> Result<()> {
    if let Some(v) = o.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "soft output {} at position {v} is outside (0, 1)",
            o[v]
        )));
    }
    Ok(())
}

/// The modified loss written as the ratio expression
/// `mean_v [1 + (o_v / (1 - o_v))^(1 - 2 x_v)]^-1`.
pub fn single_loss_ratio_form(o: &[f64], bits: &[u8]) -> Result<f64> {
    check_lengths(o.len(), bits)?;
    check_open_unit(o)?;
    let sum: f64 = o
        .iter()
        .zip(bits)
        .map(|(&p, &x)| 1.0 / (1.0 + (p / (1.0 - p)).powi(1 - 2 * i32::from(x))))
        .sum();
    Ok(sum / o.len() as f64)
}

/// Modified loss of one soft-output vector, evaluated through the logit of
/// `o`: the mean of `sigmoid(-l)` over zeros and `sigmoid(l)` over ones.
pub fn single_loss(o: &[f64], bits: &[u8]) -> Result<f64> {
    check_lengths(o.len(), bits)?;
    check_open_unit(o)?;
    let llrs: Vec<f64> = o.iter().map(|&p| p.ln() - (-p).ln_1p()).collect();
    single_loss_llr(&llrs, bits)
}

/// Modified loss from output LLRs `s` (`o = sigmoid(s)`).
pub fn single_loss_llr(s: &[f64], bits: &[u8]) -> Result<f64> {
    check_lengths(s.len(), bits)?;
    let sum: f64 = s.iter().zip(bits).map(|(&l, &x)| modified_bit(l, x)).sum();
    Ok(sum / s.len() as f64)
}

#[inline]
fn signed(l: f64, x: u8) -> f64 {
    if x == 0 {
        l
    } else {
        -l
    }
}

#[inline]
fn modified_bit(l: f64, x: u8) -> f64 {
    sigmoid(-signed(l, x))
}

/// Mean of [`single_loss`] over iterations.
pub fn multi_loss(outputs: &[Vec<f64>], bits: &[u8]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::InvalidArgument(
            "multi-loss needs at least one iteration".into(),
        ));
    }
    let mut sum = 0.0;
    for o in outputs {
        sum += single_loss(o, bits)?;
    }
    Ok(sum / outputs.len() as f64)
}

/// Binary cross-entropy with `o` the probability of a 0.
pub fn cross_entropy_loss(o: &[f64], bits: &[u8]) -> Result<f64> {
    check_lengths(o.len(), bits)?;
    let sum: f64 = o
        .iter()
        .zip(bits)
        .map(|(&p, &x)| {
            let p = p.clamp(CE_FLOOR, 1.0 - CE_FLOOR);
            if x == 0 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / o.len() as f64)
}

/// Output-LLR bound equivalent to clamping `o` at [`CE_FLOOR`].
fn ce_llr_bound() -> f64 {
    ((1.0 - CE_FLOOR) / CE_FLOOR).ln()
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss of one bit and its derivative with respect to the output LLR.
fn bit_loss_and_slope(function: LossFunction, l: f64, x: u8) -> (f64, f64) {
    match function {
        LossFunction::Modified => {
            let z = signed(l, x);
            let p = sigmoid(-z);
            // d/dz sigmoid(-z) = -p (1 - p)
            let dz = -p * sigmoid(z);
            (p, if x == 0 { dz } else { -dz })
        }
        LossFunction::CrossEntropy => {
            let b = ce_llr_bound();
            let lc = l.clamp(-b, b);
            let active = l.abs() < b;
            let z = signed(lc, x);
            let value = softplus(-z);
            let dz = if active { -sigmoid(-z) } else { 0.0 };
            (value, if x == 0 { dz } else { -dz })
        }
    }
}

/// Loss over the per-iteration output LLRs and `dL/ds_t` for each iteration
/// (all zero except the last one for a single loss).
pub fn loss_and_adjoints(
    output_llrs: &[Vec<f64>],
    bits: &[u8],
    loss: LossConfig,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let iters = output_llrs.len();
    if iters == 0 {
        return Err(Error::InvalidArgument("no decoder outputs".into()));
    }
    let n = bits.len();
    let mut adj = vec![vec![0.0; n]; iters];
    let first = if loss.multi { 0 } else { iters - 1 };
    let used = (iters - first) as f64;
    let scale = 1.0 / (used * n as f64);
    let mut total = 0.0;
    for t in first..iters {
        check_lengths(output_llrs[t].len(), bits)?;
        let mut sum = 0.0;
        for v in 0..n {
            let (value, slope) = bit_loss_and_slope(loss.function, output_llrs[t][v], bits[v]);
            sum += value;
            adj[t][v] = slope * scale;
        }
        total += sum / n as f64;
    }
    Ok((total / used, adj))
}

/// Loss value only, from output LLRs.
pub fn loss_from_llrs(output_llrs: &[Vec<f64>], bits: &[u8], loss: LossConfig) -> Result<f64> {
    loss_and_adjoints(output_llrs, bits, loss).map(|(l, _)| l)
}

/// Whether the cross-entropy clamp is active at each output (kinks in the
/// loss for finite-difference checks).
pub(crate) fn clamp_pattern(output_llrs: &[Vec<f64>], loss: LossConfig) -> Vec<bool> {
    match loss.function {
        LossFunction::Modified => Vec::new(),
        LossFunction::CrossEntropy => {
            let b = ce_llr_bound();
            output_llrs.iter().flatten().map(|l| l.abs() >= b).collect()
        }
    }
}
