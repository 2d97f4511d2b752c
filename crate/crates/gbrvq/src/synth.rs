//! Deterministic synthetic embedding corpora.
//!
//! Frames are drawn from a Gaussian mixture whose cluster centers come
//! from the same counter RNG as the noise, so a seed fully determines the
//! corpus. Each frame derives from its own counter stream: generation
//! order, batching and platform cannot change the output. Components are
//! snapped to binary32 because that is the embedding-file storage
//! precision.

use crate::corpus::Frames;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, CounterRng};

/// Gaussian-mixture corpus: `cluster_count` uniform centers in [-1, 1]^dim,
/// per-frame noise scaled by `spread`.
pub fn generate_synthetic_corpus(
    seed: u64,
    frame_count: usize,
    dim: usize,
    cluster_count: usize,
    spread: f64,
) -> Result<Frames> {
    if dim == 0 {
        return Err(Error::Config("dim must be at least 1".into()));
    }
    if cluster_count == 0 {
        return Err(Error::Config("cluster_count must be at least 1".into()));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::Config("spread must be finite and non-negative".into()));
    }

    let mut center_rng = CounterRng::new(derive_seed(seed, 0));
    let centers: Vec<f64> = (0..cluster_count * dim)
        .map(|_| center_rng.next_f64() * 2.0 - 1.0)
        .collect();

    let mut data = Vec::with_capacity(frame_count * dim);
    for i in 0..frame_count {
        let mut rng = CounterRng::new(derive_seed(seed, 1 + i as u64));
        let cluster = rng.next_below(cluster_count);
        let center = &centers[cluster * dim..(cluster + 1) * dim];
        let mut d = 0;
        while d < dim {
            let (a, b) = rng.next_normal_pair();
            data.push((center[d] + spread * a) as f32 as f64);
            if d + 1 < dim {
                data.push((center[d + 1] + spread * b) as f32 as f64);
            }
            d += 2;
        }
    }
    Frames::from_flat(dim, 100, data)
}
