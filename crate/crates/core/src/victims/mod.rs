//! Black-box victims: anything that maps a latent code to attribute values
//! without exposing gradients.
//!
//! The analytic victims also implement [`OracleGradient`] so tests and
//! evaluation can compare against exact Jacobians. That trait is deliberately
//! separate from [`VictimModel`].

mod external;
mod linear;
mod stub;
mod warp;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::{Endpoint, ExternalVictimClient};
pub use linear::LinearGaussianVictim;
pub use stub::{serve_stub, StubBehavior};
pub use warp::{Coupling, NonlinearWarpVictim};

use crate::error::{Error, Result};
use crate::types::{AttributeVector, HeadKind, JacobianMatrix, LatentPoint};

#[derive(Debug, Error)]
pub enum VictimError {
    #[error("victim timed out after {0:?}")]
    Timeout(Duration),

    #[error("malformed victim response: {0}")]
    Malformed(String),

    #[error("dimension mismatch in {field}: expected {expected}, got {actual}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("victim reported error for request {id}: {message}")]
    Remote { id: i64, message: String },

    #[error("handshake failed: {0}")]
    Handshake(String),

    #[error("victim connection closed")]
    Closed,

    #[error("victim i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// What one query returns. `confidence` is parallel to `attrs`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub attrs: AttributeVector,
    pub confidence: Vec<f64>,
    pub image: Option<Vec<f64>>,
}

pub trait VictimModel: Send + Sync {
    fn latent_dim(&self) -> usize;

    fn attribute_count(&self) -> usize;

    fn image_dim(&self) -> Option<usize>;

    fn heads(&self) -> &[HeadKind];

    fn query(&self, z: &LatentPoint) -> Result<QueryResult, VictimError>;

    fn query_batch(&self, zs: &[LatentPoint]) -> Result<Vec<QueryResult>, VictimError> {
        zs.iter().map(|z| self.query(z)).collect()
    }

    /// JSON description recorded in dataset headers and run manifests.
    fn descriptor(&self) -> serde_json::Value;
}

/// Exact attribute Jacobians, available only for analytic victims.
pub trait OracleGradient: Send + Sync {
    fn oracle_jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix>;
}

pub(crate) fn check_latent(z: &LatentPoint, n: usize) -> Result<(), VictimError> {
    if z.len() != n {
        return Err(VictimError::DimensionMismatch {
            field: "z",
            expected: n,
            actual: z.len(),
        });
    }
    Ok(())
}

/// Synthetic confidence: `σ(|logit|)` for classification heads, 1 for regression.
pub fn synthetic_confidence(heads: &[HeadKind], logits: &[f64]) -> Vec<f64> {
    heads
        .iter()
        .zip(logits)
        .map(|(h, &l)| match h {
            HeadKind::Classification => 1.0 / (1.0 + (-l.abs()).exp()),
            HeadKind::Regression => 1.0,
        })
        .collect()
}

/// Buildable description of a victim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VictimSpec {
    LinearGauss {
        n: usize,
        m: usize,
        seed: u64,
        #[serde(default = "default_true")]
        orthonormal: bool,
        #[serde(default)]
        image: bool,
        /// Attribute indices served as regression heads.
        #[serde(default)]
        regression: Vec<usize>,
    },
    Warp {
        n: usize,
        m: usize,
        seed: u64,
        couplings: usize,
        amplitude: f64,
        frequency: f64,
        /// Off-diagonal entry of the attribute mixing matrix.
        mixing: f64,
        gain: f64,
        #[serde(default)]
        image: bool,
    },
    External {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_batch")]
        batch_size: usize,
    },
}

fn default_true() -> bool {
    true
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_batch() -> usize {
    64
}

impl VictimSpec {
    /// Orthonormal linear victim with 16-D latents and 4 attributes.
    pub fn linear_gauss_default() -> Self {
        VictimSpec::LinearGauss {
            n: 16,
            m: 4,
            seed: 7,
            orthonormal: true,
            image: true,
            regression: Vec::new(),
        }
    }

    /// The frozen entangled nonlinear victim used by the comparison runs.
    pub fn entangled_warp() -> Self {
        VictimSpec::Warp {
            n: 16,
            m: 4,
            seed: 2024,
            couplings: 4,
            amplitude: 0.8,
            frequency: 0.9,
            mixing: 0.45,
            gain: 2.0,
            image: true,
        }
    }

    pub fn build(&self) -> Result<Victim> {
        Ok(match self {
            VictimSpec::LinearGauss {
                n,
                m,
                seed,
                orthonormal,
                image,
                regression,
            } => {
                let mut v = LinearGaussianVictim::random(*n, *m, *seed, *orthonormal)?.with_image(*image);
                for &r in regression {
                    v = v.with_head(r, HeadKind::Regression)?;
                }
                Victim::LinearGaussian(v)
            }
            VictimSpec::Warp {
                n,
                m,
                seed,
                couplings,
                amplitude,
                frequency,
                mixing,
                gain,
                image,
            } => Victim::NonlinearWarp(
                NonlinearWarpVictim::random(*n, *m, *seed, *couplings, *amplitude, *frequency, *mixing, *gain)?
                    .with_image(*image),
            ),
            VictimSpec::External {
                endpoint,
                timeout_ms,
                batch_size,
            } => Victim::External(ExternalVictimClient::connect(
                Endpoint::parse(endpoint)?,
                Duration::from_millis(*timeout_ms),
                *batch_size,
            )?),
        })
    }
}

/// Any victim this crate knows how to build.
pub enum Victim {
    LinearGaussian(LinearGaussianVictim),
    NonlinearWarp(NonlinearWarpVictim),
    External(ExternalVictimClient),
}

impl Victim {
    fn inner(&self) -> &dyn VictimModel {
        match self {
            Victim::LinearGaussian(v) => v,
            Victim::NonlinearWarp(v) => v,
            Victim::External(v) => v,
        }
    }

    pub fn oracle(&self) -> Result<&dyn OracleGradient> {
        match self {
            Victim::LinearGaussian(v) => Ok(v),
            Victim::NonlinearWarp(v) => Ok(v),
            Victim::External(_) => Err(Error::Unsupported("oracle Jacobian of an external victim")),
        }
    }

    pub fn oracle_jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix> {
        self.oracle()?.oracle_jacobian(z)
    }
}

impl VictimModel for Victim {
    fn latent_dim(&self) -> usize {
        self.inner().latent_dim()
    }

    fn attribute_count(&self) -> usize {
        self.inner().attribute_count()
    }

    fn image_dim(&self) -> Option<usize> {
        self.inner().image_dim()
    }

    fn heads(&self) -> &[HeadKind] {
        match self {
            Victim::LinearGaussian(v) => v.heads(),
            Victim::NonlinearWarp(v) => v.heads(),
            Victim::External(v) => v.heads(),
        }
    }

    fn query(&self, z: &LatentPoint) -> Result<QueryResult, VictimError> {
        self.inner().query(z)
    }

    fn query_batch(&self, zs: &[LatentPoint]) -> Result<Vec<QueryResult>, VictimError> {
        self.inner().query_batch(zs)
    }

    fn descriptor(&self) -> serde_json::Value {
        self.inner().descriptor()
    }
}
