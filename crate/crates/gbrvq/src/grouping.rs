//! Group-wise model: the embedding splits into contiguous sub-vectors,
//! each quantized by its own independent layer stack.
//!
//! Codes and reconstructions concatenate group-major, so a one-group model
//! is plain RVQ and a G-group model is exactly G standalone quantizers
//! running side by side. Parameter and complexity counts divide by G
//! accordingly while the bits per frame stay invariant.

use crate::config::{EncodeMode, QuantizerSpec};
use crate::error::{Error, Result};
use crate::rvq::FrameCodes;
use crate::vq::Codebook;

/// Per-layer training record, group-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTraining {
    pub iterations: u32,
    pub final_distortion: f64,
    /// Distortion after each Lloyd iteration.
    pub distortion_trace: Vec<f64>,
    /// Iterations (0-based) in which dead codewords were reseeded.
    pub reseed_iters: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub layers: Vec<LayerTraining>,
    pub corpus_fingerprint: u64,
}

/// A trained quantizer: `G` groups of `Nq/G` codebooks each.
#[derive(Debug, Clone, PartialEq)]
pub struct RvqModel {
    spec: QuantizerSpec,
    groups: Vec<Vec<Codebook>>,
    pub training_meta: Option<TrainingMeta>,
}

impl RvqModel {
    /// Assemble a model, checking every codebook against the configuration.
    pub fn new(spec: QuantizerSpec, groups: Vec<Vec<Codebook>>) -> Result<Self> {
        spec.validate()?;
        if groups.len() != spec.groups as usize {
            return Err(Error::Config(format!(
                "model has {} groups, configuration says {}",
                groups.len(),
                spec.groups
            )));
        }
        let n = spec.codebook_size();
        let group_dim = spec.group_dim();
        let per_group = spec.layers_per_group();
        for (g, stack) in groups.iter().enumerate() {
            if stack.len() != per_group {
                return Err(Error::Config(format!(
                    "group {g} has {} layers, expected {per_group}",
                    stack.len()
                )));
            }
            for (l, cb) in stack.iter().enumerate() {
                if cb.dim() != group_dim {
                    return Err(Error::Config(format!(
                        "group {g} layer {l} dim {} != group dim {group_dim}",
                        cb.dim()
                    )));
                }
                if cb.len() != n {
                    return Err(Error::Config(format!(
                        "group {g} layer {l} has {} codewords, expected {n}",
                        cb.len()
                    )));
                }
            }
        }
        Ok(Self {
            spec,
            groups,
            training_meta: None,
        })
    }

    pub fn spec(&self) -> &QuantizerSpec {
        &self.spec
    }

    /// Reinterpret the model under a different beam width (the codebooks
    /// are search-mode agnostic).
    pub fn with_beam_width(mut self, width: u32) -> Self {
        self.spec.beam_width = width;
        self
    }

    /// The layer stack of one group.
    pub fn group(&self, g: usize) -> &[Codebook] {
        &self.groups[g]
    }

    pub fn groups(&self) -> &[Vec<Codebook>] {
        &self.groups
    }

    fn check_frame(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.dim as usize {
            return Err(Error::Dimension {
                expected: self.spec.dim as usize,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Encode one frame; each group runs its own greedy or beam search on
    /// its sub-vector and the codes concatenate group-major.
    pub fn encode_frame(&self, x: &[f64], mode: EncodeMode) -> Result<FrameCodes> {
        self.check_frame(x)?;
        let parts = split(x, self.spec.groups as usize)?;
        let mut codes = Vec::with_capacity(self.spec.layers as usize);
        for (stack, part) in self.groups.iter().zip(parts) {
            let enc = match mode {
                EncodeMode::Greedy => crate::rvq::encode_frame_greedy(stack, part)?,
                EncodeMode::Beam { width } => {
                    crate::beam::encode_frame_beam(stack, part, width as usize)?
                }
            };
            codes.extend(enc.codes);
        }
        Ok(FrameCodes::from_raw(codes))
    }

    /// Encode and also return the concatenated final residual.
    pub fn encode_frame_with_residual(
        &self,
        x: &[f64],
        mode: EncodeMode,
    ) -> Result<(FrameCodes, Vec<f64>)> {
        let codes = self.encode_frame(x, mode)?;
        let recon = self.decode_frame(&codes, self.spec.layers)?;
        let residual = x.iter().zip(&recon).map(|(a, b)| a - b).collect();
        Ok((codes, residual))
    }

    /// Reconstruct from the first `layers_used` layers.
    ///
    /// `layers_used` must divide evenly over the groups so each contributes
    /// its first `layers_used / G` layers; `layers_used = Nq` is the full
    /// reconstruction.
    pub fn decode_frame(&self, codes: &FrameCodes, layers_used: u32) -> Result<Vec<f64>> {
        if codes.len() != self.spec.layers as usize {
            return Err(Error::Dimension {
                expected: self.spec.layers as usize,
                got: codes.len(),
            });
        }
        if layers_used == 0 || layers_used > self.spec.layers {
            return Err(Error::Config(format!(
                "layers_used ({layers_used}) must lie in 1..={}",
                self.spec.layers
            )));
        }
        if !layers_used.is_multiple_of(self.spec.groups) {
            return Err(Error::Config(format!(
                "layers_used ({layers_used}) must be divisible by groups ({})",
                self.spec.groups
            )));
        }
        let per_group_used = (layers_used / self.spec.groups) as usize;
        let per_group = self.spec.layers_per_group();
        let mut out = Vec::with_capacity(self.spec.dim as usize);
        for (g, stack) in self.groups.iter().enumerate() {
            let group_codes = &codes.codes()[g * per_group..(g + 1) * per_group];
            out.extend(crate::rvq::decode_stack(stack, group_codes, per_group_used)?);
        }
        Ok(out)
    }
}

/// Split a vector into `groups` contiguous equal slices.
pub fn split(x: &[f64], groups: usize) -> Result<Vec<&[f64]>> {
    if groups == 0 || !x.len().is_multiple_of(groups) {
        return Err(Error::Dimension {
            expected: groups,
            got: x.len(),
        });
    }
    Ok(x.chunks_exact(x.len() / groups).collect())
}

/// Codebook values held by the whole model: `G * (Nq/G) * (D/G) * N`.
pub fn parameter_count(spec: &QuantizerSpec) -> Result<u64> {
    spec.validate()?;
    (spec.layers as u64)
        .checked_mul(spec.group_dim() as u64)
        .and_then(|v| v.checked_mul(spec.codebook_size() as u64))
        .ok_or(Error::Overflow("parameter count"))
}

/// Greedy-search multiply-accumulates per second of input:
/// `G * (Nq/G) * (D/G + 1) * N * S`.
pub fn macs_per_second(spec: &QuantizerSpec) -> Result<u64> {
    spec.validate()?;
    (spec.layers as u64)
        .checked_mul(spec.group_dim() as u64 + 1)
        .and_then(|v| v.checked_mul(spec.codebook_size() as u64))
        .and_then(|v| v.checked_mul(spec.frames_per_sec as u64))
        .ok_or(Error::Overflow("macs per second"))
}
