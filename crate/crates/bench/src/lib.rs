//! Shared fixtures for the kernel benchmarks.

use latwalk_core::proxy::ProxyModel;
use latwalk_core::rng::{sample_standard_normal, seeded_rng};
use latwalk_core::types::{HeadKind, LatentPoint};

/// Proxy with `m` classification heads and randomly initialized weights.
pub fn proxy(n: usize, m: usize, depth: usize, width: usize) -> ProxyModel {
    ProxyModel::init(n, vec![HeadKind::Classification; m], depth, width, 0.0, 1).expect("valid shape")
}

pub fn latent(n: usize, seed: u64) -> LatentPoint {
    sample_standard_normal(&mut seeded_rng(seed), n).expect("n > 0")
}
