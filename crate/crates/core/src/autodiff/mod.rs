//! Minimal reverse-mode differentiation on a computation tape.
//!
//! A [`Graph`] records every operation of one forward pass in creation
//! order. Creation order is a topological order by construction (an
//! operation can only reference nodes that already exist), so the backward
//! pass is a single reverse sweep that visits each node exactly once. A
//! graph supports one backward pass; building a fresh graph per sample is
//! the intended usage (batch size 1 training).
//!
//! The operation set is exactly what the BLSTM-attention model needs:
//! affine maps, the gate nonlinearities, softmax, cross-entropy on logits,
//! sequence pooling, and the gradient reversal that drives domain
//! adversarial training (identity forward, `-lambda` scaled backward).
//!
//! All math is `f64`. Every op output and every gradient reaching a node is
//! checked finite; a NaN/Inf is a hard error rather than a silent blow-up.

mod graph;
pub mod gradcheck;
pub mod optim;

pub use graph::{Graph, NodeId};
pub use optim::{AdamState, PlateauState};

/// Numerically stable softmax of a plain slice (the graph-free twin of
/// [`Graph::softmax`]).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    graph::softmax_stable(z)
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op} produced a non-finite value")]
    NonFiniteValue { op: &'static str },
    #[error("non-finite gradient reached node {node} ({op})")]
    NonFiniteGradient { node: usize, op: &'static str },
    #[error("non-finite gradient for parameter `{param}`")]
    NonFiniteParamGradient { param: String },
    #[error("backward already ran on this graph; build a new graph to differentiate again")]
    BackwardConsumed,
    #[error("backward target must be a single-element tensor, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("cross-entropy target {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("gradient reversal lambda must be >= 0, got {lambda}")]
    NegativeLambda { lambda: f64 },
    #[error("{op} needs at least one input row")]
    EmptySequence { op: &'static str },
}
