//! Random redundant decoding: short decoder blocks separated by random code
//! automorphisms, with each block's input mixed from the channel LLRs and
//! the previous block's output.

use super::decoder::{decode, hard_decision, soft_output};
use super::weights::WeightSet;
use crate::codes::{sample_automorphism_with, Permutation, TannerGraph};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Where the permutations between blocks come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Automorphisms {
    /// Fresh uniform samples from the cyclic/doubling group.
    Random { seed: u64 },
    /// No reordering.
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RrdConfig {
    pub num_blocks: usize,
    pub iterations_per_permutation: usize,
    /// Weight of the previous block's output in the next block's input;
    /// `0` feeds the plain channel LLRs.
    pub mixing: f64,
    /// Damping used inside every block, overriding the weight set's value.
    pub damping: f64,
    pub automorphisms: Automorphisms,
    /// Stop as soon as the hard decision satisfies every check.
    pub early_exit: bool,
}

impl RrdConfig {
    pub fn new(num_blocks: usize, mixing: f64, damping: f64, seed: u64) -> Self {
        Self {
            num_blocks,
            iterations_per_permutation: 2,
            mixing,
            damping,
            automorphisms: Automorphisms::Random { seed },
            early_exit: true,
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.num_blocks * self.iterations_per_permutation
    }

    fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 || self.iterations_per_permutation == 0 {
            return Err(Error::InvalidArgument(
                "RRD needs at least one block and iteration".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mixing) || !(0.0..=1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(
                "RRD mixing and damping must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Decoder output in the original bit order.
#[derive(Clone, Debug, PartialEq)]
pub struct RrdOutput {
    pub output_llrs: Vec<f64>,
    pub outputs: Vec<f64>,
    pub hard_decision: Vec<u8>,
    pub blocks_run: usize,
    /// Composite permutation applied to the bit positions at the end; the
    /// value at original position `i` was decoded at position `image(i)`.
    pub permutation: Permutation,
}

/// Runs RRD. `weights` must have `iterations_per_permutation` iterations;
/// its damping is replaced by `rrd.damping`.
pub fn rrd_decode(
    llr: &[f64],
    graph: &TannerGraph,
    weights: &WeightSet,
    rrd: &RrdConfig,
) -> Result<RrdOutput> {
    rrd.validate()?;
    let n = graph.num_vars();
    if weights.iterations() != rrd.iterations_per_permutation {
        return Err(Error::ShapeMismatch(format!(
            "RRD blocks run {} iterations but the weight set has {}",
            rrd.iterations_per_permutation,
            weights.iterations()
        )));
    }
    let mut rng = match rrd.automorphisms {
        Automorphisms::Random { seed } => {
            // fail early on lengths without automorphisms
            crate::codes::sample_automorphism(n, seed)?;
            Some(seeded(seed, 1))
        }
        Automorphisms::Identity => None,
    };
    let mut block_weights = weights.clone();
    block_weights.set_damping(rrd.damping);

    let mut composite = Permutation::identity(n);
    let mut channel = llr.to_vec();
    let mut input = llr.to_vec();
    let mut blocks_run = 0;
    let mut out_llrs;
    loop {
        let state = decode(&input, graph, &block_weights)?;
        blocks_run += 1;
        out_llrs = state.final_output_llrs().to_vec();
        let solved = rrd.early_exit && graph.syndrome_ok(&state.hard_decision);
        if solved || blocks_run == rrd.num_blocks {
            break;
        }
        let beta = rrd.mixing;
        let mixed: Vec<f64> = channel
            .iter()
            .zip(&out_llrs)
            .map(|(&l, &s)| (1.0 - beta) * l + beta * s)
            .collect();
        let pi = match rng.as_mut() {
            Some(r) => sample_automorphism_with(n, r)?,
            None => Permutation::identity(n),
        };
        channel = pi.apply(&channel);
        input = pi.apply(&mixed);
        composite = pi.compose(&composite);
    }
    let output_llrs = composite.inverse().apply(&out_llrs);
    let outputs: Vec<f64> = output_llrs.iter().map(|&s| soft_output(s)).collect();
    let hard = outputs.iter().map(|&o| hard_decision(o)).collect();
    Ok(RrdOutput {
        output_llrs,
        outputs,
        hard_decision: hard,
        blocks_run,
        permutation: composite,
    })
}
