//! Weighted belief-propagation decoding.

mod decoder;
mod rrd;
mod weights;

pub use decoder::{
    check_to_variable_pre, damp, decode, decode_with_trace, hard_decision, marginalize,
    soft_output, variable_to_check_pre, DecodeTrace, MessageState,
};
pub use rrd::{rrd_decode, Automorphisms, RrdConfig, RrdOutput};
pub use weights::{logit, sigmoid, ParamKind, Row, WeightMode, WeightSet, LLR_CLIP};
