use serde_json::json;

use super::{check_latent, synthetic_confidence, OracleGradient, QueryResult, VictimError, VictimModel};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, Matrix};
use crate::rng::{seeded_rng, standard_normal};
use crate::types::{AttributeVector, HeadKind, JacobianMatrix, LatentPoint};

/// Affine victim: logits `W z + b` with unit-norm rows of `W`.
#[derive(Debug, Clone)]
pub struct LinearGaussianVictim {
    weights: Matrix,
    bias: Vec<f64>,
    heads: Vec<HeadKind>,
    image: bool,
    seed: Option<u64>,
}

/// Orthonormalizes `rows` in place with two passes of modified Gram–Schmidt.
pub(crate) fn orthonormalize(rows: &mut [Vec<f64>]) -> Result<()> {
    for i in 0..rows.len() {
        for _ in 0..2 {
            for k in 0..i {
                let c = dot(&rows[k], &rows[i]);
                let (done, rest) = rows.split_at_mut(i);
                axpy(-c, &done[k], &mut rest[0]);
            }
        }
        let len = norm(&rows[i]);
        if len < 1e-12 {
            return Err(Error::InvalidArgument("rows are linearly dependent".into()));
        }
        rows[i].iter_mut().for_each(|v| *v /= len);
    }
    Ok(())
}

impl LinearGaussianVictim {
    /// Builds a victim from explicit weights; every row must have unit norm.
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::InvalidDimension("victim needs n > 0 and m > 0".into()));
        }
        if bias.len() != weights.rows() {
            return Err(Error::Shape {
                expected: weights.rows(),
                actual: bias.len(),
            });
        }
        for r in weights.row_iter() {
            if (norm(r) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument("victim weight rows must be unit-norm".into()));
            }
        }
        let m = weights.rows();
        Ok(Self {
            weights,
            bias,
            heads: vec![HeadKind::Classification; m],
            image: false,
            seed: None,
        })
    }

    /// Gaussian rows, normalized; `orthonormal` additionally orthogonalizes them (needs `m <= n`).
    pub fn random(n: usize, m: usize, seed: u64, orthonormal: bool) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidDimension("victim needs n > 0 and m > 0".into()));
        }
        if orthonormal && m > n {
            return Err(Error::InvalidArgument(format!("cannot fit {m} orthonormal rows in {n} dimensions")));
        }
        let mut rng = seeded_rng(seed);
        let mut rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| standard_normal(&mut rng)).collect())
            .collect();
        if orthonormal {
            orthonormalize(&mut rows)?;
        } else {
            for r in &mut rows {
                let len = norm(r);
                r.iter_mut().for_each(|v| *v /= len);
            }
        }
        let bias = vec![0.0; m];
        let mut v = Self::new(Matrix::from_rows(&rows)?, bias)?;
        v.seed = Some(seed);
        Ok(v)
    }

    pub fn with_bias(mut self, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != self.bias.len() {
            return Err(Error::Shape {
                expected: self.bias.len(),
                actual: bias.len(),
            });
        }
        self.bias = bias;
        Ok(self)
    }

    pub fn with_head(mut self, j: usize, kind: HeadKind) -> Result<Self> {
        let slot = self
            .heads
            .get_mut(j)
            .ok_or_else(|| Error::InvalidArgument(format!("no attribute {j}")))?;
        *slot = kind;
        Ok(self)
    }

    /// Expose `z` itself as the generated image.
    pub fn with_image(mut self, image: bool) -> Self {
        self.image = image;
        self
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weights.matvec(x);
        for (yi, b) in y.iter_mut().zip(&self.bias) {
            *yi += b;
        }
        y
    }
}

impl VictimModel for LinearGaussianVictim {
    fn latent_dim(&self) -> usize {
        self.weights.cols()
    }

    fn attribute_count(&self) -> usize {
        self.weights.rows()
    }

    fn image_dim(&self) -> Option<usize> {
        self.image.then(|| self.latent_dim())
    }

    fn heads(&self) -> &[HeadKind] {
        &self.heads
    }

    fn query(&self, z: &LatentPoint) -> Result<QueryResult, VictimError> {
        check_latent(z, self.latent_dim())?;
        let logits = self.logits(z.as_slice());
        let confidence = synthetic_confidence(&self.heads, &logits);
        let attrs = AttributeVector::new(logits).map_err(|e| VictimError::Malformed(e.to_string()))?;
        Ok(QueryResult {
            attrs,
            confidence,
            image: self.image.then(|| z.as_slice().to_vec()),
        })
    }

    fn descriptor(&self) -> serde_json::Value {
        json!({
            "kind": "linear-gauss",
            "n": self.latent_dim(),
            "m": self.attribute_count(),
            "seed": self.seed,
        })
    }
}

impl OracleGradient for LinearGaussianVictim {
    fn oracle_jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix> {
        if z.len() != self.latent_dim() {
            return Err(Error::Shape {
                expected: self.latent_dim(),
                actual: z.len(),
            });
        }
        JacobianMatrix::new(self.weights.clone())
    }
}
