//! Nonlinear victim built from additive coupling maps.
//!
//! Each coupling updates a subset of coordinates from the complement:
//! `x[a_i] += amplitude · sin(Σ_k u[i,k] · x[p_k])`. Additive couplings are
//! bijective (subtract in reverse order) and smooth, and with a pure sine the
//! composite warp is odd, so `φ(0) = 0`. Attributes are
//! `gain · C · W · φ(z) + b` where `C` has a unit diagonal.

use serde_json::json;

use super::linear::LinearGaussianVictim;
use super::{check_latent, synthetic_confidence, OracleGradient, QueryResult, VictimError, VictimModel};
use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::rng::{seeded_rng, standard_normal};
use crate::types::{AttributeVector, HeadKind, JacobianMatrix, LatentPoint};
use rand::seq::SliceRandom;

#[derive(Debug, Clone)]
pub struct Coupling {
    pub active: Vec<usize>,
    pub passive: Vec<usize>,
    /// `|active| × |passive|`
    pub coeffs: Matrix,
    pub amplitude: f64,
}

impl Coupling {
    fn arguments(&self, x: &[f64]) -> Vec<f64> {
        self.coeffs
            .row_iter()
            .map(|r| r.iter().zip(&self.passive).map(|(u, &p)| u * x[p]).sum())
            .collect()
    }

    fn apply(&self, x: &mut [f64]) {
        let args = self.arguments(x);
        for (&a, arg) in self.active.iter().zip(args) {
            x[a] += self.amplitude * arg.sin();
        }
    }

    fn invert(&self, x: &mut [f64]) {
        let args = self.arguments(x);
        for (&a, arg) in self.active.iter().zip(args) {
            x[a] -= self.amplitude * arg.sin();
        }
    }

    /// `jac ← D(x) · jac` where `D` is this coupling's Jacobian at `x` (pre-update).
    fn push_jacobian(&self, x: &[f64], jac: &mut Matrix) {
        let args = self.arguments(x);
        for (i, (&a, arg)) in self.active.iter().zip(args).enumerate() {
            let c = self.amplitude * arg.cos();
            let mut acc = vec![0.0; jac.cols()];
            for (u, &p) in self.coeffs.row(i).iter().zip(&self.passive) {
                axpy(c * u, jac.row(p), &mut acc);
            }
            for (dst, add) in jac.row_mut(a).iter_mut().zip(&acc) {
                *dst += add;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearWarpVictim {
    base: LinearGaussianVictim,
    couplings: Vec<Coupling>,
    mixing: Matrix,
    gain: f64,
    image: bool,
    descriptor: serde_json::Value,
}

impl NonlinearWarpVictim {
    pub fn new(base: LinearGaussianVictim, couplings: Vec<Coupling>, mixing: Matrix, gain: f64) -> Result<Self> {
        let n = base.latent_dim();
        let m = base.attribute_count();
        if mixing.rows() != m || mixing.cols() != m {
            return Err(Error::Shape {
                expected: m,
                actual: mixing.rows(),
            });
        }
        if (0..m).any(|i| mixing[(i, i)] != 1.0) {
            return Err(Error::InvalidArgument("mixing matrix must have a unit diagonal".into()));
        }
        for c in &couplings {
            let overlap = c.active.iter().any(|a| c.passive.contains(a));
            let bad = c.active.iter().chain(&c.passive).any(|&i| i >= n);
            if overlap || bad || c.coeffs.rows() != c.active.len() || c.coeffs.cols() != c.passive.len() {
                return Err(Error::InvalidArgument("malformed coupling".into()));
            }
        }
        if !(gain > 0.0) {
            return Err(Error::InvalidArgument("gain must be positive".into()));
        }
        Ok(Self {
            base,
            couplings,
            mixing,
            gain,
            image: false,
            descriptor: json!({ "kind": "warp", "n": n, "m": m }),
        })
    }

    /// Random construction: orthonormal readout rows, `couplings` sine
    /// couplings over random half splits, and `C = I + mixing·(11ᵀ − I)`.
    #[allow(clippy::too_many_arguments)]
    pub fn random(
        n: usize,
        m: usize,
        seed: u64,
        couplings: usize,
        amplitude: f64,
        frequency: f64,
        mixing: f64,
        gain: f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension("warp needs n >= 2".into()));
        }
        let base = LinearGaussianVictim::random(n, m, seed, true)?;
        let mut rng = seeded_rng(seed ^ 0x5EED_C0DE);
        let layers = (0..couplings)
            .map(|_| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng);
                let passive = idx.split_off(n / 2);
                let active = idx;
                let std = frequency / (passive.len() as f64).sqrt();
                let data = (0..active.len() * passive.len())
                    .map(|_| std * standard_normal(&mut rng))
                    .collect();
                Ok(Coupling {
                    coeffs: Matrix::from_vec(active.len(), passive.len(), data)?,
                    active,
                    passive,
                    amplitude,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut c = Matrix::identity(m);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    c[(i, j)] = mixing;
                }
            }
        }
        let mut v = Self::new(base, layers, c, gain)?;
        v.descriptor = json!({
            "kind": "warp",
            "n": n,
            "m": m,
            "seed": seed,
            "couplings": couplings,
            "amplitude": amplitude,
            "frequency": frequency,
            "mixing": mixing,
            "gain": gain,
        });
        Ok(v)
    }

    /// Expose `φ(z)` as the generated image.
    pub fn with_image(mut self, image: bool) -> Self {
        self.image = image;
        self
    }

    pub fn base(&self) -> &LinearGaussianVictim {
        &self.base
    }

    pub fn mixing(&self) -> &Matrix {
        &self.mixing
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn warp(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        for c in &self.couplings {
            c.apply(&mut x);
        }
        x
    }

    pub fn unwarp(&self, x: &[f64]) -> Vec<f64> {
        let mut z = x.to_vec();
        for c in self.couplings.iter().rev() {
            c.invert(&mut z);
        }
        z
    }

    /// `Dφ(z)`, accumulated forward through the couplings.
    pub fn warp_jacobian(&self, z: &[f64]) -> Matrix {
        let mut x = z.to_vec();
        let mut jac = Matrix::identity(z.len());
        for c in &self.couplings {
            c.push_jacobian(&x, &mut jac);
            c.apply(&mut x);
        }
        jac
    }

    fn logits(&self, z: &[f64]) -> Vec<f64> {
        let pre = self.base.weights().matvec(&self.warp(z));
        let mut out = self.mixing.matvec(&pre);
        for (o, b) in out.iter_mut().zip(self.base.bias()) {
            *o = self.gain * *o + b;
        }
        out
    }
}

impl VictimModel for NonlinearWarpVictim {
    fn latent_dim(&self) -> usize {
        self.base.latent_dim()
    }

    fn attribute_count(&self) -> usize {
        self.base.attribute_count()
    }

    fn image_dim(&self) -> Option<usize> {
        self.image.then(|| self.latent_dim())
    }

    fn heads(&self) -> &[HeadKind] {
        self.base.heads()
    }

    fn query(&self, z: &LatentPoint) -> Result<QueryResult, VictimError> {
        check_latent(z, self.latent_dim())?;
        let logits = self.logits(z.as_slice());
        let confidence = synthetic_confidence(self.heads(), &logits);
        let attrs = AttributeVector::new(logits).map_err(|e| VictimError::Malformed(e.to_string()))?;
        Ok(QueryResult {
            attrs,
            confidence,
            image: self.image.then(|| self.warp(z.as_slice())),
        })
    }

    fn descriptor(&self) -> serde_json::Value {
        self.descriptor.clone()
    }
}

impl OracleGradient for NonlinearWarpVictim {
    fn oracle_jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix> {
        if z.len() != self.latent_dim() {
            return Err(Error::Shape {
                expected: self.latent_dim(),
                actual: z.len(),
            });
        }
        let dphi = self.warp_jacobian(z.as_slice());
        let mut j = self.mixing.matmul(self.base.weights()).matmul(&dphi);
        j.as_mut_slice().iter_mut().for_each(|v| *v *= self.gain);
        JacobianMatrix::new(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use crate::rng::sample_standard_normal;
    use crate::victims::VictimSpec;

    fn frozen() -> NonlinearWarpVictim {
        match VictimSpec::entangled_warp().build().unwrap() {
            crate::victims::Victim::NonlinearWarp(v) => v,
            _ => unreachable!(),
        }
    }

    fn fd_jacobian(v: &NonlinearWarpVictim, z: &[f64], h: f64) -> Matrix {
        let n = z.len();
        let m = v.attribute_count();
        let mut out = Matrix::zeros(m, n);
        for i in 0..n {
            let mut p = z.to_vec();
            let mut q = z.to_vec();
            p[i] += h;
            q[i] -= h;
            let (fp, fq) = (v.logits(&p), v.logits(&q));
            for j in 0..m {
                out[(j, i)] = (fp[j] - fq[j]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn degenerate_warp_matches_linear_victim() {
        let base = LinearGaussianVictim::random(6, 3, 5, true).unwrap();
        let warp = NonlinearWarpVictim::new(base.clone(), Vec::new(), Matrix::identity(3), 1.0).unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..10 {
            let z = sample_standard_normal(&mut rng, 6).unwrap();
            assert_eq!(warp.query(&z).unwrap(), base.query(&z).unwrap());
        }
    }

    #[test]
    fn oracle_matches_finite_differences() {
        let v = frozen();
        let mut rng = seeded_rng(21);
        for _ in 0..20 {
            let z = sample_standard_normal(&mut rng, v.latent_dim()).unwrap();
            let exact = v.oracle_jacobian(&z).unwrap();
            let fd = fd_jacobian(&v, z.as_slice(), 1e-5);
            let scale = fd.as_slice().iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for (a, b) in exact.matrix().as_slice().iter().zip(fd.as_slice()) {
                assert!((a - b).abs() / scale < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn oracle_at_origin_is_chain_rule_product() {
        let v = frozen();
        let n = v.latent_dim();
        let z0 = vec![0.0; n];
        assert!(v.warp(&z0).iter().all(|x| *x == 0.0));
        // Dφ(0) by central differences of φ alone, then C·W·Dφ(0) by hand.
        let h = 1e-6;
        let mut dphi = Matrix::zeros(n, n);
        for i in 0..n {
            let mut p = z0.clone();
            p[i] = h;
            let (fp, fq) = (v.warp(&p), v.warp(&p.iter().map(|x| -x).collect::<Vec<_>>()));
            for r in 0..n {
                dphi[(r, i)] = (fp[r] - fq[r]) / (2.0 * h);
            }
        }
        let expected = v.mixing().matmul(v.base().weights()).matmul(&dphi);
        let got = v.oracle_jacobian(&LatentPoint::zeros(n)).unwrap();
        for (a, b) in got.matrix().as_slice().iter().zip(expected.as_slice()) {
            assert!((a - v.gain() * b).abs() < 1e-8, "{a} vs {}", v.gain() * b);
        }
    }

    #[test]
    fn warp_is_bijective() {
        let v = frozen();
        let mut rng = seeded_rng(3);
        for _ in 0..50 {
            let z = sample_standard_normal(&mut rng, v.latent_dim()).unwrap();
            let back = v.unwarp(&v.warp(z.as_slice()));
            for (a, b) in back.iter().zip(z.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entangled_rows_are_measurably_correlated() {
        let v = frozen();
        let mut rng = seeded_rng(100);
        let mut best = 0.0f64;
        for _ in 0..100 {
            let z = sample_standard_normal(&mut rng, v.latent_dim()).unwrap();
            let j = v.oracle_jacobian(&z).unwrap();
            let cos = dot(j.row(0), j.row(1)) / (norm(j.row(0)) * norm(j.row(1)));
            best = best.max(cos.abs());
        }
        assert!(best > 0.1, "max |cos| {best}");
    }

    #[test]
    fn statelessness() {
        let v = frozen();
        let z = sample_standard_normal(&mut seeded_rng(8), v.latent_dim()).unwrap();
        let first = v.query(&z).unwrap();
        for _ in 0..1000 {
            assert_eq!(v.query(&z).unwrap(), first);
        }
    }
}
