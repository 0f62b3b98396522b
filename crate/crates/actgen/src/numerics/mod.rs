//! Differentiable-computation core: a tape-based reverse-mode autograd
//! engine over row-major `f64` tensors, a seeded deterministic RNG, and
//! an Adam optimizer.
//!
//! A training step builds a fresh [`Graph`], runs the forward pass while
//! the tape records every operation, then calls [`Graph::backward`] to
//! obtain exact gradients for any leaf. Values are immutable once
//! written, so finished graphs can be read from multiple threads.

mod adam;
mod attention;
pub mod check;
mod graph;
mod rng;

pub use adam::{Adam, AdamConfig};
pub use attention::{multi_head_attention, AttnMask, AttnProj};
pub use graph::{Grads, Graph, Tensor};
pub use rng::RngState;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: input too short, need at least {needed} rows, got {got}")]
    InputTooShort {
        op: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("{op}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("training diverged: non-finite gradient for parameter `{param}`")]
    TrainingDivergence { param: String },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Dense row-major matrix. The plain-value sibling of a graph [`Tensor`];
/// feature files, parameters and checkpoints all carry these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `x softmax'd` in place over one slice, stabilized by max-subtraction.
pub fn softmax_slice(x: &mut [f64]) {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in x.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in x.iter_mut() {
        *v /= z;
    }
}

/// Log-softmax over one slice without building a graph; decoding uses this.
pub fn log_softmax_slice(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = x.iter().map(|v| (v - m).exp()).sum();
    let lz = z.ln() + m;
    x.iter().map(|v| v - lz).collect()
}
