//! Codebook learning: residual-cascade k-means per layer per group.
//!
//! Layer 0 of each group clusters that group's sub-vectors; the corpus
//! residuals against the trained layer feed the next one. Seeding is
//! k-means++ driven by the counter RNG, so the same seed, corpus and
//! configuration reproduce the model bit for bit. Dead codewords reseed
//! to the frames farthest from their assigned codeword, in deterministic
//! order, which keeps utilization up at the cost of a logged
//! non-monotonic step.
//!
//! Finished layers are snapped to storage precision (binary32) before the
//! residual pass, so a model written to disk and read back is the model
//! that produced the residuals.

use rayon::prelude::*;

use crate::config::QuantizerSpec;
use crate::corpus::Frames;
use crate::error::{Error, Result};
use crate::grouping::{LayerTraining, RvqModel, TrainingMeta};
use crate::rng::{derive_seed, CounterRng};
use crate::vq::Codebook;

/// Frames per parallel task. Distance searches fan out per chunk while
/// every accumulation runs in fixed order, keeping results independent of
/// the thread count.
const CHUNK: usize = 2048;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub spec: QuantizerSpec,
    pub max_iters: u32,
    pub rel_tol: f64,
    pub seed: u64,
    /// When set, codewords move by an exponential moving average toward
    /// their cluster mean instead of jumping onto it (pure Lloyd).
    pub ema_decay: Option<f64>,
    /// Codewords with fewer assignments than this are reseeded.
    pub dead_code_threshold: u64,
}

impl TrainConfig {
    pub fn new(spec: QuantizerSpec, seed: u64) -> Self {
        Self {
            spec,
            max_iters: 25,
            rel_tol: 1e-4,
            seed,
            ema_decay: None,
            dead_code_threshold: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        if let Some(decay) = self.ema_decay {
            if !(decay > 0.0 && decay <= 1.0) {
                return Err(Error::Config("ema_decay must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// One Lloyd update: assignment, centroid means, dead-code reseeding,
/// and the distortion of the updated codebook.
#[derive(Debug, Clone)]
pub struct LloydStep {
    pub codebook: Codebook,
    /// Mean squared residual norm per frame, measured against the updated
    /// codebook.
    pub distortion: f64,
    pub assignment_counts: Vec<u64>,
    /// Codeword indices reseeded this step (fewer assignments than the
    /// threshold).
    pub reseeded: Vec<usize>,
}

/// Parallel assignment: nearest codeword index and squared error per frame.
fn assign(cb: &Codebook, frames: &Frames) -> Vec<(usize, f64)> {
    let dim = frames.dim();
    frames
        .as_flat()
        .par_chunks(CHUNK * dim)
        .flat_map_iter(|chunk| {
            chunk
                .chunks_exact(dim)
                .map(|f| cb.nearest_index(f))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Mean squared residual norm of the corpus under a codebook.
fn distortion_of(cb: &Codebook, frames: &Frames) -> f64 {
    let dim = frames.dim();
    let partials: Vec<f64> = frames
        .as_flat()
        .par_chunks(CHUNK * dim)
        .map(|chunk| {
            chunk
                .chunks_exact(dim)
                .map(|f| cb.nearest_index(f).1)
                .sum()
        })
        .collect();
    partials.iter().sum::<f64>() / frames.len() as f64
}

pub fn lloyd_step(cb: &Codebook, frames: &Frames, config: &TrainConfig) -> Result<LloydStep> {
    if frames.dim() != cb.dim() {
        return Err(Error::Dimension {
            expected: cb.dim(),
            got: frames.dim(),
        });
    }
    if frames.is_empty() {
        return Err(Error::Empty("training corpus has no frames"));
    }
    let n = cb.len();
    let dim = cb.dim();
    let assignments = assign(cb, frames);

    let mut sums = vec![0.0f64; n * dim];
    let mut counts = vec![0u64; n];
    for (frame, &(idx, _)) in frames.iter().zip(&assignments) {
        counts[idx] += 1;
        for (s, v) in sums[idx * dim..(idx + 1) * dim].iter_mut().zip(frame) {
            *s += v;
        }
    }

    let mut flat = cb.as_flat().to_vec();
    for i in 0..n {
        if counts[i] == 0 {
            continue;
        }
        let inv = 1.0 / counts[i] as f64;
        match config.ema_decay {
            None => {
                for (c, s) in flat[i * dim..(i + 1) * dim].iter_mut().zip(&sums[i * dim..]) {
                    *c = s * inv;
                }
            }
            Some(decay) => {
                for (c, s) in flat[i * dim..(i + 1) * dim].iter_mut().zip(&sums[i * dim..]) {
                    *c = decay * *c + (1.0 - decay) * (s * inv);
                }
            }
        }
    }

    // Reseed starved codewords onto the farthest-out frames, lowest dead
    // index taking the farthest frame first.
    let dead: Vec<usize> = (0..n)
        .filter(|&i| counts[i] < config.dead_code_threshold)
        .collect();
    if !dead.is_empty() {
        let mut by_dist: Vec<usize> = (0..frames.len()).collect();
        by_dist.sort_unstable_by(|&a, &b| {
            assignments[b]
                .1
                .total_cmp(&assignments[a].1)
                .then(a.cmp(&b))
        });
        for (slot, &code) in dead.iter().enumerate().take(frames.len()) {
            let frame = frames.frame(by_dist[slot]);
            flat[code * dim..(code + 1) * dim].copy_from_slice(frame);
        }
    }

    let codebook = Codebook::from_flat(dim, flat)?;
    let distortion = distortion_of(&codebook, frames);
    Ok(LloydStep {
        codebook,
        distortion,
        assignment_counts: counts,
        reseeded: dead,
    })
}

/// k-means++ seeding: first center uniform, the rest sampled with
/// probability proportional to the squared distance to the nearest chosen
/// center.
fn kmeans_pp_init(frames: &Frames, n: usize, rng: &mut CounterRng) -> Codebook {
    let dim = frames.dim();
    let count = frames.len();
    let mut flat = Vec::with_capacity(n * dim);
    let first = rng.next_below(count);
    flat.extend_from_slice(frames.frame(first));

    let mut best_dist: Vec<f64> = frames
        .iter()
        .map(|f| crate::vq::sq_dist_kernel(f, frames.frame(first)))
        .collect();

    for _ in 1..n {
        let total: f64 = best_dist.iter().sum();
        let picked = if total > 0.0 {
            let threshold = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_nonzero = first;
            for (i, &w) in best_dist.iter().enumerate() {
                if w > 0.0 {
                    last_nonzero = i;
                    acc += w;
                    if acc > threshold {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last_nonzero)
        } else {
            // Degenerate corpus: every frame already sits on a center.
            rng.next_below(count)
        };
        let center = frames.frame(picked).to_vec();
        for (d, f) in best_dist.iter_mut().zip(frames.iter()) {
            let dist = crate::vq::sq_dist_kernel(f, &center);
            if dist < *d {
                *d = dist;
            }
        }
        flat.extend_from_slice(&center);
    }
    Codebook::from_flat(dim, flat).expect("corpus frames are finite")
}

/// Snap every entry to the nearest binary32 value (the storage precision).
fn round_to_storage(cb: &Codebook) -> Codebook {
    let flat = cb.as_flat().iter().map(|&v| v as f32 as f64).collect();
    Codebook::from_flat(cb.dim(), flat).expect("rounding keeps values finite")
}

struct TrainedLayer {
    codebook: Codebook,
    meta: LayerTraining,
}

/// Train one layer to convergence on `frames`.
fn train_layer(frames: &Frames, n: usize, seed: u64, config: &TrainConfig) -> Result<TrainedLayer> {
    let mut rng = CounterRng::new(seed);
    let mut codebook = kmeans_pp_init(frames, n, &mut rng);
    let mut trace = Vec::new();
    let mut reseed_iters = Vec::new();
    let mut prev = f64::INFINITY;

    let mut iterations = 0;
    for iter in 0..config.max_iters {
        let step = lloyd_step(&codebook, frames, config)?;
        codebook = step.codebook;
        trace.push(step.distortion);
        iterations = iter + 1;
        let reseeded = !step.reseeded.is_empty();
        if reseeded {
            reseed_iters.push(iter);
        }
        if !reseeded && prev.is_finite() {
            let improvement = if prev > 0.0 { (prev - step.distortion) / prev } else { 0.0 };
            if improvement < config.rel_tol {
                break;
            }
        }
        prev = step.distortion;
    }

    let codebook = round_to_storage(&codebook);
    let final_distortion = distortion_of(&codebook, frames);
    Ok(TrainedLayer {
        codebook,
        meta: LayerTraining {
            iterations,
            final_distortion,
            distortion_trace: trace,
            reseed_iters,
        },
    })
}

/// Subtract each frame's nearest codeword, yielding the next layer's corpus.
fn residual_corpus(cb: &Codebook, frames: &Frames) -> Frames {
    let dim = frames.dim();
    let data: Vec<f64> = frames
        .as_flat()
        .par_chunks(CHUNK * dim)
        .flat_map_iter(|chunk| {
            let mut out = Vec::with_capacity(chunk.len());
            for f in chunk.chunks_exact(dim) {
                let (idx, _) = cb.nearest_index(f);
                out.extend(f.iter().zip(cb.entry(idx)).map(|(a, b)| a - b));
            }
            out
        })
        .collect();
    Frames::from_flat(dim, frames.frames_per_sec(), data).expect("residuals stay finite")
}

/// Learn a full model from an embedding corpus.
pub fn train(config: &TrainConfig, frames: &Frames) -> Result<RvqModel> {
    config.validate()?;
    let spec = config.spec;
    if frames.dim() != spec.dim as usize {
        return Err(Error::Dimension {
            expected: spec.dim as usize,
            got: frames.dim(),
        });
    }
    let n = spec.codebook_size();
    if frames.len() < n {
        return Err(Error::InsufficientData {
            needed: n,
            got: frames.len(),
        });
    }

    let per_group = spec.layers_per_group();
    let mut groups = Vec::with_capacity(spec.groups as usize);
    let mut meta_layers = Vec::with_capacity(spec.layers as usize);
    for g in 0..spec.groups as usize {
        let mut residual = frames.group_columns(g, spec.groups as usize)?;
        let mut stack = Vec::with_capacity(per_group);
        for layer in 0..per_group {
            let stream = (g as u64) << 32 | layer as u64;
            let trained = train_layer(&residual, n, derive_seed(config.seed, stream), config)?;
            residual = residual_corpus(&trained.codebook, &residual);
            stack.push(trained.codebook);
            meta_layers.push(trained.meta);
        }
        groups.push(stack);
    }

    let mut model = RvqModel::new(spec, groups)?;
    model.training_meta = Some(TrainingMeta {
        layers: meta_layers,
        corpus_fingerprint: frames.fingerprint(),
    });
    Ok(model)
}
