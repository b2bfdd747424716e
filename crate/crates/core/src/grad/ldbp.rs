//! Adjoint of the filter chain with respect to its taps.

use num_complex::Complex64;

use super::GradientVector;
use crate::error::{Error, Result};
use crate::ldbp::{FilterBank, LdbpTape};

/// Gradient of a real loss with respect to the free taps of `bank` (layout
/// of [`FilterBank::to_params`]), given the Wirtinger adjoint
/// `2 dL/d(conj y)` of the chain output. Also returns the adjoint of the
/// chain input.
pub fn ldbp_backward(
    bank: &FilterBank,
    tape: &LdbpTape,
    output_adjoint: &[Complex64],
) -> Result<(GradientVector, Vec<Complex64>)> {
    let steps = bank.steps();
    if tape.filter_inputs.len() != steps || tape.rotation_inputs.len() != steps {
        return Err(Error::ShapeMismatch(
            "tape does not match the filter bank".into(),
        ));
    }
    let n_taps = bank.taps_per_step();
    let free = bank.free_taps_per_step();
    let c = (n_taps as isize - 1) / 2;
    let mut grad = vec![0.0; bank.num_params()];
    let mut g = output_adjoint.to_vec();
    let len = g.len() as isize;
    for i in (0..steps).rev() {
        let taps = &bank.taps[i];
        let x = &tape.filter_inputs[i];
        if x.len() != g.len() {
            return Err(Error::ShapeMismatch("adjoint length".into()));
        }
        // filter: y[n] = sum_k h[k] x[n + c - k]
        let mut g_taps = vec![Complex64::new(0.0, 0.0); n_taps];
        let mut g_x = vec![Complex64::new(0.0, 0.0); x.len()];
        for (k, &hk) in taps.iter().enumerate() {
            let shift = c - k as isize;
            let lo = (-shift).max(0);
            let hi = (len - shift).min(len);
            let hc = hk.conj();
            let mut acc = Complex64::new(0.0, 0.0);
            for n in lo..hi {
                let j = (n + shift) as usize;
                acc += x[j].conj() * g[n as usize];
                g_x[j] += hc * g[n as usize];
            }
            g_taps[k] = acc;
        }
        let base = i * 2 * free;
        for k in 0..free {
            let mut gk = g_taps[k];
            let mirror = n_taps - 1 - k;
            if bank.symmetric && mirror != k {
                gk += g_taps[mirror];
            }
            grad[base + 2 * k] = gk.re;
            grad[base + 2 * k + 1] = gk.im;
        }
        // rotation: y = z e, e = exp(j phi |z|^2)
        let phi = bank.nl_phase[i];
        let z_in = &tape.rotation_inputs[i];
        for (gz, &z) in g_x.iter_mut().zip(z_in) {
            let e = Complex64::from_polar(1.0, phi * z.norm_sqr());
            let gy = *gz;
            let jphi = Complex64::new(0.0, phi);
            *gz = gy.conj() * jphi * z * z * e
                + gy * e.conj() * (Complex64::new(1.0, 0.0) - jphi * z.norm_sqr());
        }
        if g_x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("filter chain backward, step {i}")));
        }
        g = g_x;
    }
    Ok((GradientVector::new(grad)?, g))
}
