//! The unrolled weighted, damped belief-propagation decoder.
//!
//! Messages live on edges (see [`TannerGraph`] for the edge order). Both
//! message directions start at zero. Iteration `t` (zero-based here) runs:
//!
//! 1. variable-to-check pre-update from the channel LLRs and the previous
//!    check-to-variable messages, then damping;
//! 2. check-to-variable pre-update (tanh rule, magnitude clipped), then
//!    damping with the same coefficient;
//! 3. marginalization into the output LLR `s` and soft output `o = sigmoid(s)`,
//!    the estimated probability that the bit is 0.
//!
//! Sums and products are accumulated in ascending edge order and every
//! "all but one" term is formed directly rather than by division, so with
//! unit weights and `gamma = 1` the arithmetic is exactly that of textbook
//! sum-product decoding.

use super::weights::{sigmoid, Row, WeightSet};
use crate::codes::TannerGraph;
use crate::error::{Error, Result};

/// Messages after the last iteration together with every iteration's output.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState {
    pub var_to_check: Vec<f64>,
    pub check_to_var: Vec<f64>,
    /// Pre-sigmoid output LLRs, one vector per iteration.
    pub output_llrs: Vec<Vec<f64>>,
    /// Soft outputs `o^(t)`, one vector per iteration.
    pub outputs: Vec<Vec<f64>>,
    /// `1` where the final soft output is below one half.
    pub hard_decision: Vec<u8>,
}

impl MessageState {
    pub fn final_output_llrs(&self) -> &[f64] {
        self.output_llrs.last().expect("at least one iteration")
    }
}

/// Intermediate values kept for the backward pass. Index `t` of the
/// per-iteration vectors refers to zero-based iteration `t`; `var_to_check`
/// and `check_to_var` additionally hold the all-zero initial state at index 0,
/// so iteration `t` reads index `t` and writes index `t + 1`.
#[derive(Clone, Debug, Default)]
pub struct DecodeTrace {
    pub var_to_check: Vec<Vec<f64>>,
    pub check_to_var: Vec<Vec<f64>>,
    pub var_pre: Vec<Vec<f64>>,
    pub check_pre: Vec<Vec<f64>>,
    /// `tanh(lambda / 2)` of the damped variable-to-check messages.
    pub tanh_half: Vec<Vec<f64>>,
    /// Whether the clip was active for each check pre-update.
    pub clipped: Vec<Vec<bool>>,
}

/// Soft output clamp keeping `o` strictly inside (0, 1).
const OUTPUT_FLOOR: f64 = f64::MIN_POSITIVE;
const OUTPUT_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic map from output LLR to the soft output used by the decoder.
#[inline]
pub fn soft_output(llr: f64) -> f64 {
    sigmoid(llr).clamp(OUTPUT_FLOOR, OUTPUT_CEIL)
}

/// Hard decision from a soft output; ties decide 0.
#[inline]
pub fn hard_decision(o: f64) -> u8 {
    u8::from(o < 0.5)
}

/// Variable-to-check pre-update for iteration `t`:
/// `w_v ell_v + sum_{c' != c} w_{vc'} lambdahat_{c' -> v}`.
pub fn variable_to_check_pre(
    graph: &TannerGraph,
    check_to_var: &[f64],
    llr: &[f64],
    weights: &WeightSet,
    t: usize,
    out: &mut [f64],
) {
    let w_ch = weights.channel_row(t);
    let w_msg = weights.message_row(t);
    for (v, &l) in llr.iter().enumerate() {
        let edges = graph.var_edges(v);
        let base = w_ch.at(v) * l;
        for &e in edges {
            let mut acc = base;
            for &other in edges {
                if other != e {
                    acc += w_msg.at(other) * check_to_var[other];
                }
            }
            out[e] = acc;
        }
    }
}

/// Check-to-variable pre-update: `2 atanh(prod_{v' != v} tanh(lambda/2))`
/// clipped to `[-clip, clip]`. Fills `tanh_half` with the per-edge tanh values
/// and `clipped` with the clip activity.
pub fn check_to_variable_pre(
    graph: &TannerGraph,
    var_to_check: &[f64],
    clip: f64,
    out: &mut [f64],
    tanh_half: &mut [f64],
    clipped: &mut [bool],
) {
    for c in 0..graph.num_checks() {
        let range = graph.check_edges(c);
        for e in range.clone() {
            tanh_half[e] = (var_to_check[e] * 0.5).tanh();
        }
        for e in range.clone() {
            let mut prod = 1.0;
            for other in range.clone() {
                if other != e {
                    prod *= tanh_half[other];
                }
            }
            let raw = 2.0 * odd_atanh(prod);
            clipped[e] = !(raw.abs() <= clip);
            out[e] = raw.clamp(-clip, clip);
        }
    }
}

/// `atanh` evaluated on `|x|` so that negated inputs give exactly negated
/// outputs; the library routine is not bitwise odd.
#[inline]
fn odd_atanh(x: f64) -> f64 {
    x.abs().atanh().copysign(x)
}

/// `(1 - gamma) previous + gamma pre_update`.
pub fn damp(previous: &[f64], pre_update: &[f64], gamma: f64) -> Vec<f64> {
    assert_eq!(previous.len(), pre_update.len(), "damp: length mismatch");
    previous
        .iter()
        .zip(pre_update)
        .map(|(&p, &q)| (1.0 - gamma) * p + gamma * q)
        .collect()
}

#[inline]
fn damp_in_place(state: &mut [f64], pre_update: &[f64], gamma: f64) {
    for (p, &q) in state.iter_mut().zip(pre_update) {
        *p = (1.0 - gamma) * *p + gamma * q;
    }
}

/// Output LLRs `w_v ell_v + sum_{c in dv} w_vc lambdahat_{c -> v}` at
/// iteration `t`, using the marginalization weights.
pub fn marginalize(
    graph: &TannerGraph,
    check_to_var: &[f64],
    llr: &[f64],
    weights: &WeightSet,
    t: usize,
) -> Vec<f64> {
    marginalize_rows(
        graph,
        check_to_var,
        llr,
        weights.output_channel_row(t),
        weights.output_message_row(t),
    )
}

fn marginalize_rows(
    graph: &TannerGraph,
    check_to_var: &[f64],
    llr: &[f64],
    w_ch: Row<'_>,
    w_msg: Row<'_>,
) -> Vec<f64> {
    llr.iter()
        .enumerate()
        .map(|(v, &l)| {
            let mut acc = w_ch.at(v) * l;
            for &e in graph.var_edges(v) {
                acc += w_msg.at(e) * check_to_var[e];
            }
            acc
        })
        .collect()
}

fn check_inputs(llr: &[f64], graph: &TannerGraph, weights: &WeightSet) -> Result<()> {
    if llr.len() != graph.num_vars() {
        return Err(Error::ShapeMismatch(format!(
            "{} channel LLRs for a graph with {} variables",
            llr.len(),
            graph.num_vars()
        )));
    }
    weights.validate(graph)
}

/// Runs `weights.iterations()` decoding iterations from zero messages.
pub fn decode(llr: &[f64], graph: &TannerGraph, weights: &WeightSet) -> Result<MessageState> {
    check_inputs(llr, graph, weights)?;
    Ok(run(llr, graph, weights, None))
}

/// Like [`decode`], also returning the trace needed for gradients.
pub fn decode_with_trace(
    llr: &[f64],
    graph: &TannerGraph,
    weights: &WeightSet,
) -> Result<(MessageState, DecodeTrace)> {
    check_inputs(llr, graph, weights)?;
    let mut trace = DecodeTrace::default();
    let state = run(llr, graph, weights, Some(&mut trace));
    Ok((state, trace))
}

fn run(
    llr: &[f64],
    graph: &TannerGraph,
    weights: &WeightSet,
    mut trace: Option<&mut DecodeTrace>,
) -> MessageState {
    let n_edges = graph.num_edges();
    let clip = weights.llr_clip();
    let mut mu = vec![0.0; n_edges];
    let mut nu = vec![0.0; n_edges];
    let mut mu_pre = vec![0.0; n_edges];
    let mut nu_pre = vec![0.0; n_edges];
    let mut tanh_half = vec![0.0; n_edges];
    let mut clipped = vec![false; n_edges];
    let mut output_llrs = Vec::with_capacity(weights.iterations());
    if let Some(tr) = trace.as_deref_mut() {
        tr.var_to_check.push(mu.clone());
        tr.check_to_var.push(nu.clone());
    }

    for t in 0..weights.iterations() {
        let gamma = weights.damping(t);
        variable_to_check_pre(graph, &nu, llr, weights, t, &mut mu_pre);
        damp_in_place(&mut mu, &mu_pre, gamma);
        check_to_variable_pre(graph, &mu, clip, &mut nu_pre, &mut tanh_half, &mut clipped);
        damp_in_place(&mut nu, &nu_pre, gamma);
        output_llrs.push(marginalize(graph, &nu, llr, weights, t));
        if let Some(tr) = trace.as_deref_mut() {
            tr.var_to_check.push(mu.clone());
            tr.check_to_var.push(nu.clone());
            tr.var_pre.push(mu_pre.clone());
            tr.check_pre.push(nu_pre.clone());
            tr.tanh_half.push(tanh_half.clone());
            tr.clipped.push(clipped.clone());
        }
    }

    let outputs: Vec<Vec<f64>> = output_llrs
        .iter()
        .map(|s| s.iter().map(|&x| soft_output(x)).collect())
        .collect();
    let hard = outputs
        .last()
        .expect("at least one iteration")
        .iter()
        .map(|&o| hard_decision(o))
        .collect();
    MessageState {
        var_to_check: mu,
        check_to_var: nu,
        output_llrs,
        outputs,
        hard_decision: hard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_tanner, BinaryMatrix};
    use crate::wbp::WeightMode;

    fn graph(rows: &[Vec<u8>]) -> TannerGraph {
        build_tanner(&BinaryMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn variable_update_sums_other_checks() {
        // variable 0 sits in three checks
        let g = graph(&[vec![1, 1], vec![1, 0], vec![1, 1]]);
        let w = WeightSet::plain(1, &g, 1.0);
        let e0 = g.edge_index(0, 0).unwrap();
        let e1 = g.edge_index(0, 1).unwrap();
        let e2 = g.edge_index(0, 2).unwrap();
        let mut nu = vec![0.0; g.num_edges()];
        nu[e1] = 2.0;
        nu[e2] = -1.0;
        let mut out = vec![0.0; g.num_edges()];
        variable_to_check_pre(&g, &nu, &[1.0, 0.0], &w, 0, &mut out);
        assert_eq!(out[e0], 2.0);

        let mut ss = WeightSet::new(WeightMode::SimpleScaled, false, 1, &g);
        ss.channel_values_mut()[0] = 0.5;
        ss.message_values_mut()[0] = 2.0;
        variable_to_check_pre(&g, &nu, &[1.0, 0.0], &ss, 0, &mut out);
        assert_eq!(out[e0], 2.5);
    }

    #[test]
    fn degree_one_variable_gets_channel_only() {
        let g = graph(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let mut ss = WeightSet::new(WeightMode::SimpleScaled, false, 1, &g);
        ss.channel_values_mut()[0] = 0.75;
        let nu = vec![5.0; g.num_edges()];
        let mut out = vec![0.0; g.num_edges()];
        variable_to_check_pre(&g, &nu, &[2.0, 1.0, 1.0], &ss, 0, &mut out);
        assert_eq!(out[g.edge_index(0, 0).unwrap()], 1.5);
    }

    #[test]
    fn check_update_values() {
        let g = graph(&[vec![1, 1, 1]]);
        let mut out = vec![0.0; 3];
        let mut th = vec![0.0; 3];
        let mut cl = vec![false; 3];
        check_to_variable_pre(&g, &[1.0, 2.0, 0.0], 15.0, &mut out, &mut th, &mut cl);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 0.0);
        // 30-digit evaluation: 0.735325664055519224709930424887
        assert!(
            (out[2] - 0.735_325_664_055_519_2).abs() < 1e-14,
            "{}",
            out[2]
        );
        check_to_variable_pre(&g, &[40.0, 40.0, 40.0], 15.0, &mut out, &mut th, &mut cl);
        assert_eq!(out, vec![15.0; 3]);
        assert!(cl.iter().all(|&c| c));
        check_to_variable_pre(&g, &[-40.0, 40.0, 40.0], 15.0, &mut out, &mut th, &mut cl);
        assert_eq!(out[0], 15.0);
        assert_eq!(out[1], -15.0);
    }

    #[test]
    fn damping_endpoints() {
        assert_eq!(damp(&[2.0, -1.0], &[4.0, 3.0], 1.0), vec![4.0, 3.0]);
        assert_eq!(damp(&[2.0, -1.0], &[4.0, 3.0], 0.0), vec![2.0, -1.0]);
        assert_eq!(damp(&[2.0], &[4.0], 0.5), vec![3.0]);
    }

    #[test]
    fn marginal_values() {
        let g = graph(&[vec![1, 1]]);
        let w = WeightSet::plain(1, &g, 1.0);
        let s = marginalize(&g, &[0.0, 0.0], &[0.0, 0.0], &w, 0);
        assert_eq!(soft_output(s[0]), 0.5);
        let s = marginalize(&g, &[1.0, 0.0], &[1.0, 0.0], &w, 0);
        assert!((soft_output(s[0]) - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert!(soft_output(15.0) > 0.999);
        assert!(soft_output(1e4) < 1.0);
        assert!(soft_output(-1e4) > 0.0);
    }

    #[test]
    fn tie_decides_zero() {
        assert_eq!(hard_decision(0.5), 0);
        assert_eq!(hard_decision(0.4999), 1);
    }

    #[test]
    fn shape_errors() {
        let g = graph(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let w = WeightSet::plain(2, &g, 1.0);
        assert!(decode(&[0.0; 2], &g, &w).is_err());
        let other = graph(&[vec![1, 1, 1, 1]]);
        let w_other = WeightSet::new(WeightMode::FullyWeighted, false, 2, &other);
        assert!(decode(&[0.0; 3], &g, &w_other).is_err());
    }

    #[test]
    fn clip_bounds_messages_under_damping() {
        let g = graph(&[vec![1, 1, 1, 0], vec![0, 1, 1, 1], vec![1, 0, 1, 1]]);
        let w = WeightSet::plain(10, &g, 0.6);
        let st = decode(&[50.0, -50.0, 50.0, 50.0], &g, &w).unwrap();
        assert!(st.check_to_var.iter().all(|m| m.abs() <= 15.0));
    }
}
