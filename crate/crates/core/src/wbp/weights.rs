//! Trainable decoder parameters.

use serde::{Deserialize, Serialize};

use crate::codes::TannerGraph;
use crate::error::{Error, Result};

/// Default magnitude bound on check-to-variable messages.
pub const LLR_CLIP: f64 = 15.0;

/// How weights are shared across edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// All weights fixed to 1.
    Plain,
    /// One channel and one message weight per iteration.
    SimpleScaled,
    /// One weight per variable (channel) and per edge (message) per iteration.
    FullyWeighted,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Self::Plain),
            "simple-scaled" | "ss" => Ok(Self::SimpleScaled),
            "fully-weighted" | "fw" => Ok(Self::FullyWeighted),
            _ => Err(Error::InvalidArgument(format!("unknown weight mode {s:?}"))),
        }
    }
}

/// A view of one iteration's weights.
#[derive(Clone, Copy, Debug)]
pub enum Row<'a> {
    Unit,
    Scalar(f64),
    Each(&'a [f64]),
}

impl Row<'_> {
    #[inline(always)]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Row::Unit => 1.0,
            Row::Scalar(w) => *w,
            Row::Each(ws) => ws[i],
        }
    }
}

/// Which weight array a flat parameter index belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Channel,
    Message,
    OutputChannel,
    OutputMessage,
    /// Damping, stored as the logit of gamma in the flat vector.
    DampingLogit,
}

/// Every trainable decoder parameter together with its sharing layout.
///
/// Arrays are laid out slot-major: slot `s` of the channel weights occupies
/// `channel[s * w .. (s + 1) * w]` with `w = 1` (simple scaled) or `w = N`
/// (fully weighted); message weights likewise with `w = |E|`. There is one
/// slot per iteration, or a single slot when weights are shared in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    mode: WeightMode,
    temporal_sharing: bool,
    iterations: usize,
    num_vars: usize,
    num_edges: usize,
    llr_clip: f64,
    channel: Vec<f64>,
    message: Vec<f64>,
    /// Separate marginalization weights; `None` ties them to the message weights.
    output: Option<(Vec<f64>, Vec<f64>)>,
    /// One value, or one per iteration.
    damping: Vec<f64>,
}

impl WeightSet {
    /// Unit weights for `graph` with no damping (`gamma = 1`).
    pub fn new(
        mode: WeightMode,
        temporal_sharing: bool,
        iterations: usize,
        graph: &TannerGraph,
    ) -> Self {
        Self::with_shape(
            mode,
            temporal_sharing,
            iterations,
            graph.num_vars(),
            graph.num_edges(),
        )
    }

    pub fn with_shape(
        mode: WeightMode,
        temporal_sharing: bool,
        iterations: usize,
        num_vars: usize,
        num_edges: usize,
    ) -> Self {
        let mut w = Self {
            mode,
            temporal_sharing,
            iterations,
            num_vars,
            num_edges,
            llr_clip: LLR_CLIP,
            channel: Vec::new(),
            message: Vec::new(),
            output: None,
            damping: vec![1.0],
        };
        w.channel = vec![1.0; w.slots() * w.channel_width()];
        w.message = vec![1.0; w.slots() * w.message_width()];
        w
    }

    /// Standard BP with `iterations` rounds and damping `gamma`.
    pub fn plain(iterations: usize, graph: &TannerGraph, gamma: f64) -> Self {
        Self::new(WeightMode::Plain, false, iterations, graph).with_damping(gamma)
    }

    pub fn with_damping(mut self, gamma: f64) -> Self {
        self.damping = vec![gamma];
        self
    }

    /// One damping coefficient per iteration, all initialized to `gamma`.
    pub fn with_per_iteration_damping(mut self, gamma: f64) -> Self {
        self.damping = vec![gamma; self.iterations];
        self
    }

    /// Gives marginalization its own weights, initialized from the current
    /// message weights.
    pub fn with_untied_output(mut self) -> Self {
        self.output = Some((self.channel.clone(), self.message.clone()));
        self
    }

    pub fn with_llr_clip(mut self, clip: f64) -> Self {
        self.llr_clip = clip;
        self
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn temporal_sharing(&self) -> bool {
        self.temporal_sharing
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn llr_clip(&self) -> f64 {
        self.llr_clip
    }

    pub fn untied_output(&self) -> bool {
        self.output.is_some()
    }

    pub fn per_iteration_damping(&self) -> bool {
        self.damping.len() > 1
    }

    pub fn damping_values(&self) -> &[f64] {
        &self.damping
    }

    pub fn channel_values(&self) -> &[f64] {
        &self.channel
    }

    pub fn message_values(&self) -> &[f64] {
        &self.message
    }

    pub fn output_values(&self) -> Option<(&[f64], &[f64])> {
        self.output
            .as_ref()
            .map(|(c, m)| (c.as_slice(), m.as_slice()))
    }

    pub fn channel_values_mut(&mut self) -> &mut [f64] {
        &mut self.channel
    }

    pub fn message_values_mut(&mut self) -> &mut [f64] {
        &mut self.message
    }

    pub fn set_damping(&mut self, gamma: f64) {
        for g in &mut self.damping {
            *g = gamma;
        }
    }

    /// Number of weight slots in time.
    pub fn slots(&self) -> usize {
        match self.mode {
            WeightMode::Plain => 0,
            _ if self.temporal_sharing => 1,
            _ => self.iterations,
        }
    }

    pub fn channel_width(&self) -> usize {
        match self.mode {
            WeightMode::Plain => 0,
            WeightMode::SimpleScaled => 1,
            WeightMode::FullyWeighted => self.num_vars,
        }
    }

    pub fn message_width(&self) -> usize {
        match self.mode {
            WeightMode::Plain => 0,
            WeightMode::SimpleScaled => 1,
            WeightMode::FullyWeighted => self.num_edges,
        }
    }

    /// Slot used at (zero-based) iteration `t`.
    #[inline]
    pub fn slot(&self, t: usize) -> usize {
        if self.temporal_sharing {
            0
        } else {
            t
        }
    }

    fn row<'a>(&self, values: &'a [f64], width: usize, t: usize) -> Row<'a> {
        match self.mode {
            WeightMode::Plain => Row::Unit,
            WeightMode::SimpleScaled => Row::Scalar(values[self.slot(t)]),
            WeightMode::FullyWeighted => {
                let s = self.slot(t);
                Row::Each(&values[s * width..(s + 1) * width])
            }
        }
    }

    pub fn channel_row(&self, t: usize) -> Row<'_> {
        self.row(&self.channel, self.num_vars, t)
    }

    pub fn message_row(&self, t: usize) -> Row<'_> {
        self.row(&self.message, self.num_edges, t)
    }

    pub fn output_channel_row(&self, t: usize) -> Row<'_> {
        match &self.output {
            Some((c, _)) => self.row(c, self.num_vars, t),
            None => self.channel_row(t),
        }
    }

    pub fn output_message_row(&self, t: usize) -> Row<'_> {
        match &self.output {
            Some((_, m)) => self.row(m, self.num_edges, t),
            None => self.message_row(t),
        }
    }

    #[inline]
    pub fn damping(&self, t: usize) -> f64 {
        if self.damping.len() == 1 {
            self.damping[0]
        } else {
            self.damping[t]
        }
    }

    /// Checks the invariants and that the set fits `graph`.
    pub fn validate(&self, graph: &TannerGraph) -> Result<()> {
        if graph.num_vars() != self.num_vars || graph.num_edges() != self.num_edges {
            return Err(Error::ShapeMismatch(format!(
                "weights built for N = {}, |E| = {} but graph has N = {}, |E| = {}",
                self.num_vars,
                self.num_edges,
                graph.num_vars(),
                graph.num_edges()
            )));
        }
        self.validate_shape()
    }

    pub fn validate_shape(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "decoder needs at least one iteration".into(),
            ));
        }
        let expect_ch = self.slots() * self.channel_width();
        let expect_msg = self.slots() * self.message_width();
        if self.channel.len() != expect_ch || self.message.len() != expect_msg {
            return Err(Error::ShapeMismatch(
                "weight arrays do not match mode".into(),
            ));
        }
        if let Some((c, m)) = &self.output {
            if c.len() != expect_ch || m.len() != expect_msg {
                return Err(Error::ShapeMismatch(
                    "output weight arrays do not match mode".into(),
                ));
            }
        }
        if !(self.damping.len() == 1 || self.damping.len() == self.iterations) {
            return Err(Error::ShapeMismatch(
                "damping must be scalar or per iteration".into(),
            ));
        }
        if self.damping.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidArgument("damping must lie in [0, 1]".into()));
        }
        if !(self.llr_clip > 0.0) {
            return Err(Error::InvalidArgument("LLR clip must be positive".into()));
        }
        let all = self.channel.iter().chain(&self.message);
        if all.clone().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weight set".into()));
        }
        Ok(())
    }

    /// Layout of the flat trainable vector: weights in the order channel,
    /// message, output channel, output message, then damping logits when
    /// `train_damping` is set.
    pub fn param_kinds(&self, train_damping: bool) -> Vec<ParamKind> {
        let mut kinds = Vec::new();
        kinds.extend(std::iter::repeat_n(ParamKind::Channel, self.channel.len()));
        kinds.extend(std::iter::repeat_n(ParamKind::Message, self.message.len()));
        if let Some((c, m)) = &self.output {
            kinds.extend(std::iter::repeat_n(ParamKind::OutputChannel, c.len()));
            kinds.extend(std::iter::repeat_n(ParamKind::OutputMessage, m.len()));
        }
        if train_damping {
            kinds.extend(std::iter::repeat_n(
                ParamKind::DampingLogit,
                self.damping.len(),
            ));
        }
        kinds
    }

    pub fn num_params(&self, train_damping: bool) -> usize {
        self.param_kinds(train_damping).len()
    }

    /// Flattens the trainable parameters; damping enters as `logit(gamma)`.
    pub fn to_params(&self, train_damping: bool) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params(train_damping));
        p.extend_from_slice(&self.channel);
        p.extend_from_slice(&self.message);
        if let Some((c, m)) = &self.output {
            p.extend_from_slice(c);
            p.extend_from_slice(m);
        }
        if train_damping {
            p.extend(self.damping.iter().map(|&g| logit(g)));
        }
        p
    }

    /// Inverse of [`WeightSet::to_params`].
    pub fn set_params(&mut self, params: &[f64], train_damping: bool) -> Result<()> {
        if params.len() != self.num_params(train_damping) {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.num_params(train_damping),
                params.len()
            )));
        }
        let mut rest = params;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        take(&mut self.channel);
        take(&mut self.message);
        if let Some((c, m)) = &mut self.output {
            take(c);
            take(m);
        }
        if train_damping {
            for (g, &z) in self.damping.iter_mut().zip(rest) {
                *g = sigmoid(z);
            }
        }
        Ok(())
    }

    /// Assembles a weight set from its parts (used by checkpoint loading).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        mode: WeightMode,
        temporal_sharing: bool,
        iterations: usize,
        num_vars: usize,
        num_edges: usize,
        llr_clip: f64,
        channel: Vec<f64>,
        message: Vec<f64>,
        output: Option<(Vec<f64>, Vec<f64>)>,
        damping: Vec<f64>,
    ) -> Result<Self> {
        let w = Self {
            mode,
            temporal_sharing,
            iterations,
            num_vars,
            num_edges,
            llr_clip,
            channel,
            message,
            output,
            damping,
        };
        w.validate_shape()?;
        Ok(w)
    }
}

/// Logistic function, evaluated without overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`sigmoid`]; saturates at `gamma` in {0, 1}.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}
