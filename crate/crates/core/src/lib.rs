//! Signalling networks as typed directed graphs, the node-flip rewrite that
//! puts them into oriented (all-activation) form, an adaptive ODE simulator
//! for the bias-parameterised test kinetics, and divergence metrics that
//! quantify how faithful the oriented reduction is as model bias grows.

// Guards are written as `!(x > 0.0)` on purpose: the negation also catches NaN,
// which the suggested `x <= 0.0` would silently wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod diag;
pub mod dsl;
pub mod dynamics;
pub mod metrics;
pub mod net;
pub mod orient;

pub use diag::{Diagnostic, Severity};
pub use net::{
    BiasClass, EdgeClass, EdgeKind, EdgeSource, EdgeSpec, ModelConfig, Network, NodeRole, NodeSpec,
    PathwaySpec, StimulusSpec, SymmetryClass,
};
pub use orient::{FlipReport, LoopSign, StimulusOrientation};
