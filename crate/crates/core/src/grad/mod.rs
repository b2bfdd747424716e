//! Exact reverse-mode gradients through the unrolled decoder and the
//! learned backpropagation filter chain, plus a finite-difference checker.
//!
//! Clipping is differentiated as the hard clip it is: zero gradient wherever
//! the clip is active. Complex parameters are flattened as `(re, im)` pairs,
//! so the real gradient pair `(dL/dre, dL/dim)` is the Wirtinger gradient
//! `2 dL/d(conj z)` written in real coordinates.

mod decoder;
mod fd;
mod ldbp;

pub use decoder::decoder_backward;
pub use fd::{finite_diff_check, Differentiable, FdReport};
pub use ldbp::ldbp_backward;

use crate::error::{Error, Result};

/// Partial derivatives of a scalar loss, in the flat order of the parameter
/// container they were computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
    norm: f64,
}

impl GradientVector {
    /// Wraps raw partials; rejects non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i}")));
        }
        let norm = l2_norm(&values);
        Ok(Self { values, norm })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            norm: 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean norm, cached at construction.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `self * a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|g| g * a).collect(),
            norm: self.norm * a.abs(),
        }
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "adding gradients of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Applies `f` to every entry and recomputes the norm.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&g| f(g)).collect())
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}
