//! Domain value types shared across modules.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm, Matrix};

/// Tolerance on `‖d‖ = 1` for non-degenerate directions.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// A position in latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentPoint(Vec<f64>);

impl LatentPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension("latent point must be non-empty".into()));
        }
        if !all_finite(&coords) {
            return Err(Error::NonFinite("latent point"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `self + alpha * dir`, checked for finiteness.
    pub fn offset(&self, alpha: f64, dir: &[f64]) -> Result<Self> {
        if dir.len() != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                actual: dir.len(),
            });
        }
        let coords: Vec<f64> = self.0.iter().zip(dir).map(|(z, d)| z + alpha * d).collect();
        Self::new(coords)
    }

    pub fn distance(&self, other: &LatentPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Linear interpolation `(1 - t) a + t b`; `t` may leave `[0, 1]`.
    pub fn lerp(&self, other: &LatentPoint, t: f64) -> Vec<f64> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    }
}

impl Index<usize> for LatentPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for LatentPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// One logit or regression value per attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeVector(Vec<f64>);

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("attribute vector must be non-empty".into()));
        }
        if !all_finite(&values) {
            return Err(Error::NonFinite("attribute vector"));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

impl Index<usize> for AttributeVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// Binary attribute reported as a logit.
    #[serde(rename = "cls")]
    Classification,
    #[serde(rename = "reg")]
    Regression,
}

/// Unit-norm step direction, or a flagged zero when no feasible direction exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVector {
    coords: Vec<f64>,
    degenerate: bool,
}

impl DirectionVector {
    /// Normalizes `v`. Returns a degenerate direction when `‖v‖ <= floor`.
    pub fn normalized(v: Vec<f64>, floor: f64) -> Result<Self> {
        if !all_finite(&v) {
            return Err(Error::NonFinite("direction"));
        }
        let len = norm(&v);
        if len <= floor || len == 0.0 {
            return Ok(Self::degenerate(v.len()));
        }
        Ok(Self {
            coords: v.into_iter().map(|x| x / len).collect(),
            degenerate: false,
        })
    }

    pub fn degenerate(n: usize) -> Self {
        Self {
            coords: vec![0.0; n],
            degenerate: true,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|x| -x).collect(),
            degenerate: self.degenerate,
        }
    }

    pub fn dot(&self, other: &DirectionVector) -> f64 {
        dot(&self.coords, &other.coords)
    }
}

/// `m × n` matrix whose row `j` is the gradient of attribute `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix(Matrix);

impl JacobianMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("jacobian"));
        }
        Ok(Self(m))
    }

    pub fn attribute_count(&self) -> usize {
        self.0.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.0.row(j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum StopReason {
    Completed,
    /// The projected direction vanished when leaving point `step`.
    DegenerateDirection { step: usize },
}

/// Points visited by a traversal, with what steered each step.
///
/// `directions[i]` and `target_gradients[i]` belong to the step leaving
/// `points[i]`, so both are one shorter than `points`. `attrs` is either
/// empty (no victim logging) or parallel to `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<LatentPoint>,
    pub attrs: Vec<AttributeVector>,
    pub directions: Vec<DirectionVector>,
    pub target_gradients: Vec<Vec<f64>>,
    pub step_size: f64,
    pub target: usize,
    pub condition: Vec<usize>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn start(&self) -> &LatentPoint {
        &self.points[0]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stopped_early(&self) -> bool {
        !matches!(self.stop, StopReason::Completed)
    }

    pub fn has_attrs(&self) -> bool {
        !self.attrs.is_empty() && self.attrs.len() == self.points.len()
    }

    /// Recorded value of attribute `j` along the path.
    pub fn attr_series(&self, j: usize) -> Vec<f64> {
        self.attrs.iter().map(|a| a[j]).collect()
    }
}
