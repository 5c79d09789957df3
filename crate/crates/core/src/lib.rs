//! Black-box latent traversal: distill a queried victim into a
//! differentiable proxy, then walk latent codes along per-step gradient
//! directions, optionally projected to keep chosen attributes fixed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod constraint;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod proxy;
pub mod rng;
pub mod traversal;
pub mod types;
pub mod victims;

pub use error::{Error, Result};
pub use types::{
    AttributeVector, DirectionVector, HeadKind, JacobianMatrix, LatentPoint, StopReason, Trajectory,
};
