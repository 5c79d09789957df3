//! Steepest feasible direction under orthogonality constraints.
//!
//! Maximizing `⟨g, d⟩` subject to `A d = 0` has no finite optimum until the
//! step length is fixed; on the unit sphere the unique maximizer is the
//! component of `g` orthogonal to the row space of `A`, normalized. That
//! component is computed by modified Gram–Schmidt with one
//! re-orthogonalization pass over the conditioned rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::types::{DirectionVector, JacobianMatrix};

/// A conditioned row whose residual norm falls below this fraction of its
/// original norm is treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// The target residual is degenerate below this fraction of `‖J_j‖`.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Attribute indices to hold fixed while editing a target.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionSet(Vec<usize>);

impl ConditionSet {
    /// Sorted, deduplicated; rejects `target ∈ K`.
    pub fn new(mut indices: Vec<usize>, target: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.contains(&target) {
            return Err(Error::InvalidArgument(format!("target {target} cannot be in its own condition set")));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the set against an `m`-attribute, `n`-dimensional problem.
    pub fn validate(&self, target: usize, m: usize, n: usize) -> Result<()> {
        if target >= m {
            return Err(Error::InvalidArgument(format!("target {target} out of range for {m} attributes")));
        }
        if let Some(&k) = self.0.iter().find(|&&k| k >= m) {
            return Err(Error::InvalidArgument(format!("condition {k} out of range for {m} attributes")));
        }
        if self.0.contains(&target) {
            return Err(Error::InvalidArgument("target is conditioned on itself".into()));
        }
        if self.0.len() >= n {
            return Err(Error::InvalidArgument(format!(
                "{} conditions leave no freedom in {n} dimensions",
                self.0.len()
            )));
        }
        Ok(())
    }
}

/// Orthonormal basis of `span(rows)`; dependent rows are dropped.
pub fn orthonormal_basis<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let original = norm(row);
        if original == 0.0 {
            continue;
        }
        let mut v = row.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let len = norm(&v);
        if len > RANK_TOL * original {
            v.iter_mut().for_each(|x| *x /= len);
            basis.push(v);
        }
    }
    basis
}

/// Removes from `v` its component in the span of the orthonormal `basis`.
pub fn reject_from(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &r);
            axpy(-c, q, &mut r);
        }
    }
    r
}

/// Unit direction of steepest ascent of attribute `target` that is
/// orthogonal to every conditioned row. Degenerate when the target row lies
/// (numerically) in the conditioned span.
pub fn project(jac: &JacobianMatrix, target: usize, cond: &ConditionSet) -> Result<DirectionVector> {
    cond.validate(target, jac.attribute_count(), jac.latent_dim())?;
    let g = jac.row(target);
    let g_norm = norm(g);
    if !g_norm.is_finite() {
        return Err(Error::NonFinite("target gradient"));
    }
    let basis = orthonormal_basis(cond.indices().iter().map(|&k| jac.row(k)));
    let residual = reject_from(&basis, g);
    DirectionVector::normalized(residual, DEGENERACY_TOL * g_norm)
}
