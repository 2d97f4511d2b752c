//! Shared test oracles, independent of the library's encode paths.

use gbrvq::rng::CounterRng;
use gbrvq::vq::Codebook;

/// Enumerate every codeword combination across the layers and return the
/// best (codes, squared error). Reconstruction is summed first and the
/// distance taken afterwards, a different arithmetic route than the
/// encoder's running-residual updates.
pub fn exhaustive_best(layers: &[Codebook], x: &[f64]) -> (Vec<u32>, f64) {
    let n = layers[0].len();
    let total = n.pow(layers.len() as u32);
    let mut best_codes = Vec::new();
    let mut best_err = f64::INFINITY;
    for path in 0..total {
        let mut rest = path;
        let mut recon = vec![0.0; x.len()];
        let mut codes = Vec::with_capacity(layers.len());
        for cb in layers {
            let idx = rest % n;
            rest /= n;
            codes.push(idx as u32);
            for (r, c) in recon.iter_mut().zip(cb.entry(idx)) {
                *r += c;
            }
        }
        let err: f64 = x.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum();
        if err < best_err {
            best_err = err;
            best_codes = codes;
        }
    }
    (best_codes, best_err)
}

pub fn random_stack(rng: &mut CounterRng, layers: usize, n: usize, dim: usize) -> Vec<Codebook> {
    (0..layers)
        .map(|_| {
            let flat: Vec<f64> = (0..n * dim).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
            Codebook::from_flat(dim, flat).unwrap()
        })
        .collect()
}

pub fn random_vec(rng: &mut CounterRng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| (rng.next_f64() * 2.0 - 1.0) * scale).collect()
}
