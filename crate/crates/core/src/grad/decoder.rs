//! Hand-derived adjoint of the unrolled decoder.
//!
//! Iteration `t` of the forward pass, with `gamma = gamma_t`:
//!
//! ```text
//! mu_pre[e]  = wc[v] l[v] + sum_{e' in E(v), e' != e} wm[e'] nu_t[e']
//! mu_{t+1}   = (1 - gamma) mu_t + gamma mu_pre
//! nu_pre[e]  = clip(2 atanh(prod_{e' in E(c), e' != e} tanh(mu_{t+1}[e'] / 2)))
//! nu_{t+1}   = (1 - gamma) nu_t + gamma nu_pre
//! s_t[v]     = oc[v] l[v] + sum_{e in E(v)} om[e] nu_{t+1}[e]
//! ```
//!
//! The backward pass walks this in reverse, carrying the adjoints of `mu`
//! and `nu` between iterations.

use super::GradientVector;
use crate::codes::TannerGraph;
use crate::error::{Error, Result};
use crate::wbp::{DecodeTrace, WeightMode, WeightSet};

/// Offsets of each parameter group inside the flat vector.
struct Layout {
    channel: usize,
    message: usize,
    out_channel: usize,
    out_message: usize,
    damping: usize,
    len: usize,
}

impl Layout {
    fn new(w: &WeightSet, train_damping: bool) -> Self {
        let ch = w.channel_values().len();
        let msg = w.message_values().len();
        let channel = 0;
        let message = ch;
        let (out_channel, out_message, damping) = if w.untied_output() {
            (ch + msg, 2 * ch + msg, 2 * (ch + msg))
        } else {
            (channel, message, ch + msg)
        };
        let len = damping
            + if train_damping {
                w.damping_values().len()
            } else {
                0
            };
        Self {
            channel,
            message,
            out_channel,
            out_message,
            damping,
            len,
        }
    }
}

/// Adds `g` to the partial of the weight that `Row` entry `i` of slot `slot`
/// reads, for the group starting at `base` with per-slot `width`.
#[inline]
fn accumulate(
    grad: &mut [f64],
    mode: WeightMode,
    base: usize,
    slot: usize,
    width: usize,
    i: usize,
    g: f64,
) {
    match mode {
        WeightMode::Plain => {}
        WeightMode::SimpleScaled => grad[base + slot] += g,
        WeightMode::FullyWeighted => grad[base + slot * width + i] += g,
    }
}

fn ensure_finite(values: &[f64], t: usize, stage: &str) -> Result<()> {
    if let Some(e) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!(
            "backward pass, iteration {t}, {stage}, edge {e}"
        )));
    }
    Ok(())
}

/// Gradient of a loss with respect to the flat parameters of `weights`
/// (layout of [`WeightSet::to_params`]), given `dL/ds_t` for every
/// iteration's output LLRs. Damping partials are taken with respect to the
/// logit of gamma.
pub fn decoder_backward(
    llr: &[f64],
    graph: &TannerGraph,
    weights: &WeightSet,
    trace: &DecodeTrace,
    output_adjoints: &[Vec<f64>],
    train_damping: bool,
) -> Result<GradientVector> {
    let iters = weights.iterations();
    let n = graph.num_vars();
    let n_edges = graph.num_edges();
    if output_adjoints.len() != iters || output_adjoints.iter().any(|a| a.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "need {iters} output adjoints of length {n}"
        )));
    }
    if trace.var_pre.len() != iters || llr.len() != n {
        return Err(Error::ShapeMismatch(
            "trace does not match the weight set".into(),
        ));
    }
    let mode = weights.mode();
    let layout = Layout::new(weights, train_damping);
    let mut grad = vec![0.0; layout.len];
    let mut gamma_grad = vec![0.0; weights.damping_values().len()];
    let (nw, ew) = (n, n_edges);

    // adjoints of mu_{t+1} and nu_{t+1}
    let mut g_mu = vec![0.0; n_edges];
    let mut g_nu = vec![0.0; n_edges];
    let mut g_pre = vec![0.0; n_edges];
    let mut g_th = vec![0.0; n_edges];
    let mut others: Vec<usize> = Vec::new();
    let mut suffix: Vec<f64> = Vec::new();

    for t in (0..iters).rev() {
        let slot = weights.slot(t);
        let gamma = weights.damping(t);
        let gamma_ix = if gamma_grad.len() == 1 { 0 } else { t };
        let nu_next = &trace.check_to_var[t + 1];
        let nu_prev = &trace.check_to_var[t];
        let mu_prev = &trace.var_to_check[t];
        let th = &trace.tanh_half[t];
        let clipped = &trace.clipped[t];

        // marginalization
        let om = weights.output_message_row(t);
        for (v, &gs) in output_adjoints[t].iter().enumerate() {
            if gs == 0.0 {
                continue;
            }
            accumulate(
                &mut grad,
                mode,
                layout.out_channel,
                slot,
                nw,
                v,
                gs * llr[v],
            );
            for &e in graph.var_edges(v) {
                g_nu[e] += gs * om.at(e);
                accumulate(
                    &mut grad,
                    mode,
                    layout.out_message,
                    slot,
                    ew,
                    e,
                    gs * nu_next[e],
                );
            }
        }

        // check-side damping
        let nu_pre = &trace.check_pre[t];
        let mut dg = 0.0;
        for e in 0..n_edges {
            dg += g_nu[e] * (nu_pre[e] - nu_prev[e]);
            g_pre[e] = gamma * g_nu[e];
            g_nu[e] *= 1.0 - gamma;
        }
        gamma_grad[gamma_ix] += dg;

        // check update; g_th collects d/d tanh(mu/2)
        g_th.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..graph.num_checks() {
            let range = graph.check_edges(c);
            for e in range.clone() {
                if clipped[e] || g_pre[e] == 0.0 {
                    continue;
                }
                others.clear();
                others.extend(range.clone().filter(|&o| o != e));
                // prefix/suffix products over the other edges
                suffix.clear();
                suffix.resize(others.len() + 1, 1.0);
                for k in (0..others.len()).rev() {
                    suffix[k] = suffix[k + 1] * th[others[k]];
                }
                let p = suffix[0];
                let g_p = g_pre[e] * 2.0 / (1.0 - p * p);
                let mut prefix = 1.0;
                for (k, &o) in others.iter().enumerate() {
                    g_th[o] += g_p * prefix * suffix[k + 1];
                    prefix *= th[o];
                }
            }
        }
        for e in 0..n_edges {
            g_mu[e] += g_th[e] * 0.5 * (1.0 - th[e] * th[e]);
        }
        ensure_finite(&g_mu, t, "check update")?;

        // variable-side damping
        let mu_pre = &trace.var_pre[t];
        let mut dg = 0.0;
        for e in 0..n_edges {
            dg += g_mu[e] * (mu_pre[e] - mu_prev[e]);
            g_pre[e] = gamma * g_mu[e];
            g_mu[e] *= 1.0 - gamma;
        }
        gamma_grad[gamma_ix] += dg;

        // variable update
        let wm = weights.message_row(t);
        for v in 0..n {
            let edges = graph.var_edges(v);
            let total: f64 = edges.iter().map(|&e| g_pre[e]).sum();
            accumulate(&mut grad, mode, layout.channel, slot, nw, v, total * llr[v]);
            for &e in edges {
                let g_other = total - g_pre[e];
                g_nu[e] += wm.at(e) * g_other;
                accumulate(
                    &mut grad,
                    mode,
                    layout.message,
                    slot,
                    ew,
                    e,
                    nu_prev[e] * g_other,
                );
            }
        }
        ensure_finite(&g_nu, t, "variable update")?;
    }

    if train_damping {
        for (k, (&gamma, &g)) in weights.damping_values().iter().zip(&gamma_grad).enumerate() {
            grad[layout.damping + k] = g * gamma * (1.0 - gamma);
        }
    }
    GradientVector::new(grad)
}
