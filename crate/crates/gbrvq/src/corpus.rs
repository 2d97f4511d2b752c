//! In-memory frame sequences and the batch encode driver.

use rayon::prelude::*;

use crate::analysis::UsageStats;
use crate::config::EncodeMode;
use crate::error::{Error, Result};
use crate::grouping::RvqModel;
use crate::rvq::FrameCodes;

/// Frames processed per rayon task. Chunking keeps reduction order fixed,
/// so results do not depend on the thread count.
const ENCODE_CHUNK: usize = 256;

/// A sequence of equal-dimension embedding frames, stored frame-major.
///
/// Every value is finite; raggedness and NaN/Inf are rejected when frames
/// enter, so the search kernels never see them.
#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    dim: usize,
    frames_per_sec: u32,
    data: Vec<f64>,
}

impl Frames {
    pub fn new(dim: usize, frames_per_sec: u32) -> Self {
        Self {
            dim,
            frames_per_sec,
            data: Vec::new(),
        }
    }

    /// Build from one vector per frame, naming the first bad frame.
    pub fn from_vecs(dim: usize, vecs: Vec<Vec<f64>>) -> Result<Self> {
        let mut frames = Self::new(dim, 100);
        for v in vecs {
            frames.push(&v)?;
        }
        Ok(frames)
    }

    /// Wrap an already-flat frame-major buffer.
    pub fn from_flat(dim: usize, frames_per_sec: u32, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("frame dim must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("frame component"));
        }
        Ok(Self {
            dim,
            frames_per_sec,
            data,
        })
    }

    pub fn push(&mut self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.dim {
            return Err(Error::FrameDimension {
                frame: self.len(),
                expected: self.dim,
                got: frame.len(),
            });
        }
        if !frame.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("frame component"));
        }
        self.data.extend_from_slice(frame);
        Ok(())
    }

    pub fn with_frames_per_sec(mut self, frames_per_sec: u32) -> Self {
        self.frames_per_sec = frames_per_sec;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames_per_sec(&self) -> u32 {
        self.frames_per_sec
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Copy out one contiguous group slice of every frame.
    pub fn group_columns(&self, group: usize, groups: usize) -> Result<Frames> {
        if groups == 0 || !self.dim.is_multiple_of(groups) || group >= groups {
            return Err(Error::Config(format!(
                "cannot take group {group} of {groups} from dim {}",
                self.dim
            )));
        }
        let gd = self.dim / groups;
        let mut data = Vec::with_capacity(self.len() * gd);
        for frame in self.iter() {
            data.extend_from_slice(&frame[group * gd..(group + 1) * gd]);
        }
        Ok(Frames {
            dim: gd,
            frames_per_sec: self.frames_per_sec,
            data,
        })
    }

    /// FNV-1a over the raw component bytes; identifies a training corpus.
    pub fn fingerprint(&self) -> u64 {
        let mut hash = 0xCBF2_9CE4_8422_2325u64;
        for v in &self.data {
            for byte in v.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        hash
    }
}

/// Encode every frame with the chosen mode, collecting per-layer codeword
/// usage counts.
///
/// Frames are independent, so chunks run in parallel; codes come back in
/// input order and the usage merge is a plain histogram sum, making the
/// output identical for any thread count.
pub fn encode_corpus(
    model: &RvqModel,
    frames: &Frames,
    mode: EncodeMode,
) -> Result<(Vec<FrameCodes>, UsageStats)> {
    if frames.dim() != model.spec().dim as usize {
        return Err(Error::Dimension {
            expected: model.spec().dim as usize,
            got: frames.dim(),
        });
    }
    let flat = frames.as_flat();
    let dim = frames.dim();
    let chunks: Vec<(Vec<FrameCodes>, UsageStats)> = flat
        .par_chunks(ENCODE_CHUNK * dim)
        .map(|chunk| {
            let mut codes = Vec::with_capacity(chunk.len() / dim);
            let mut usage = UsageStats::new(model.spec());
            for frame in chunk.chunks_exact(dim) {
                let fc = model.encode_frame(frame, mode)?;
                usage.record(&fc);
                codes.push(fc);
            }
            Ok((codes, usage))
        })
        .collect::<Result<_>>()?;

    let mut all_codes = Vec::with_capacity(frames.len());
    let mut usage = UsageStats::new(model.spec());
    for (codes, part) in chunks {
        all_codes.extend(codes);
        usage.merge(&part)?;
    }
    Ok((all_codes, usage))
}

/// Reconstruct every frame from its codes using the first `layers_used`
/// layers (see [`RvqModel::decode_frame`]).
pub fn decode_corpus(model: &RvqModel, codes: &[FrameCodes], layers_used: u32) -> Result<Frames> {
    let dim = model.spec().dim as usize;
    let recon: Vec<Vec<f64>> = codes
        .par_iter()
        .map(|fc| model.decode_frame(fc, layers_used))
        .collect::<Result<_>>()?;
    let mut frames = Frames::new(dim, model.spec().frames_per_sec);
    for r in recon {
        frames.push(&r)?;
    }
    Ok(frames)
}
