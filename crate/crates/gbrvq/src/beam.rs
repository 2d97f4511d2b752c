//! Beam search through the VQ layer cascade.
//!
//! Instead of committing to the nearest codeword per layer, the encoder
//! keeps the `k` partial quantization paths with the smallest residual
//! squared norm. Each surviving path expands with its own top-k codewords
//! (a pool of at most k^2 candidates per layer), the pool is cut back to
//! `k`, and after the last layer the single best path wins. Width 1 is
//! bit-identical to greedy encoding.
//!
//! Ties anywhere break lexicographically on (parent path ordinal, codeword
//! index); equal-error paths are kept as-is, never deduplicated. Distance
//! evaluations per frame total `N * (1 + k*(Nq-1))` against `N * Nq` for
//! greedy, which is where the complexity factor in [`beam_macs_factor`]
//! comes from.

use crate::config::{EncodeMode, QuantizerSpec};
use crate::error::{Error, Result};
use crate::grouping::RvqModel;
use crate::rvq::{FrameCodes, StackEncode};
use crate::vq::Codebook;

#[derive(Debug, Clone)]
struct BeamPath {
    codes: Vec<u32>,
    residual: Vec<f64>,
    err: f64,
}

/// Expand every path with its top-k codewords and keep the k best
/// candidates, ordered by (err, parent ordinal, codeword index).
fn expand_layer(paths: &[BeamPath], cb: &Codebook, k: usize) -> Vec<BeamPath> {
    let mut pool: Vec<(f64, usize, usize)> = Vec::with_capacity(paths.len() * k);
    let mut picks = Vec::new();
    for (parent, path) in paths.iter().enumerate() {
        cb.top_k_indices(&path.residual, k, &mut picks);
        pool.extend(picks.iter().map(|&(err, index)| (err, parent, index)));
    }
    pool.sort_unstable_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    pool.truncate(k);

    pool.into_iter()
        .map(|(err, parent, index)| {
            let parent = &paths[parent];
            let mut codes = Vec::with_capacity(parent.codes.len() + 1);
            codes.extend_from_slice(&parent.codes);
            codes.push(index as u32);
            let residual = crate::vq::residual_of(&parent.residual, cb.entry(index));
            BeamPath {
                codes,
                residual,
                err,
            }
        })
        .collect()
}

/// Quantize `x` with width-`k` beam search over the layer stack.
pub fn encode_frame_beam(layers: &[Codebook], x: &[f64], k: usize) -> Result<StackEncode> {
    if k == 0 {
        return Err(Error::Config("beam width must be at least 1".into()));
    }
    let dim = layers
        .first()
        .ok_or(Error::Empty("layer stack has no codebooks"))?
        .dim();
    if layers.iter().any(|cb| cb.dim() != dim) {
        return Err(Error::Config("all layers must share one dim".into()));
    }
    if x.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x.len(),
        });
    }

    let mut paths = vec![BeamPath {
        codes: Vec::new(),
        residual: x.to_vec(),
        err: x.iter().map(|v| v * v).sum(),
    }];
    for cb in layers {
        paths = expand_layer(&paths, cb, k);
    }
    let best = paths.swap_remove(0);
    Ok(StackEncode {
        codes: best.codes,
        residual: best.residual,
        err: best.err,
    })
}

/// Exact complexity multiplier of beam search over greedy encoding,
/// `(1 + k*(Nq-1)) / Nq` with the per-group layer count, as a reduced
/// rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamFactor {
    pub numer: u64,
    pub denom: u64,
}

impl BeamFactor {
    pub fn as_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    /// Multiply an integer count by the factor, rounding half up.
    pub fn apply(&self, value: u64) -> Result<u64> {
        let scaled = value as u128 * self.numer as u128;
        let rounded = (2 * scaled + self.denom as u128) / (2 * self.denom as u128);
        u64::try_from(rounded).map_err(|_| Error::Overflow("beam-adjusted macs"))
    }
}

impl std::fmt::Display for BeamFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.denom == 1 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn beam_macs_factor(spec: &QuantizerSpec) -> Result<BeamFactor> {
    spec.validate()?;
    let per_group = spec.layers_per_group() as u64;
    let numer = 1 + spec.beam_width as u64 * (per_group - 1);
    let g = gcd(numer, per_group);
    Ok(BeamFactor {
        numer: numer / g,
        denom: per_group / g,
    })
}

/// Group-wise beam encoding: split, beam-search each group independently,
/// concatenate the codes group-major.
pub fn encode_frame_gb(model: &RvqModel, x: &[f64], k: u32) -> Result<FrameCodes> {
    model.encode_frame(x, EncodeMode::Beam { width: k })
}
