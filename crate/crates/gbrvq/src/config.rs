//! Quantizer configuration and the sizes derived from it.
//!
//! The codebook size is never stored independently: it always comes out of
//! the bitrate arithmetic `N = 2^(R / (Nq * S))`, so a configuration and the
//! codebooks built for it cannot drift apart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full quantizer configuration.
///
/// `bitrate` is bits per second across all layers and groups; `layers` is
/// the total VQ layer count (split evenly over `groups`); `dim` is the
/// embedding dimension (also split evenly); `beam_width` is the number of
/// candidate paths kept during beam search (1 = greedy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub bitrate: u64,
    pub layers: u32,
    pub frames_per_sec: u32,
    pub dim: u32,
    pub groups: u32,
    pub beam_width: u32,
}

/// The four quantizer shapes, by group count and search width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizerKind {
    Rvq,
    GroupwiseRvq,
    BeamSearchRvq,
    GbRvq,
}

impl std::fmt::Display for QuantizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuantizerKind::Rvq => "RVQ",
            QuantizerKind::GroupwiseRvq => "Group-wise RVQ",
            QuantizerKind::BeamSearchRvq => "Beam-search RVQ",
            QuantizerKind::GbRvq => "GB-RVQ",
        })
    }
}

/// How a frame is encoded: greedy descent or width-k beam search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeMode {
    Greedy,
    Beam { width: u32 },
}

impl EncodeMode {
    pub fn beam_width(&self) -> u32 {
        match self {
            EncodeMode::Greedy => 1,
            EncodeMode::Beam { width } => *width,
        }
    }
}

impl QuantizerSpec {
    /// Check every structural constraint, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.frames_per_sec == 0 || self.dim == 0 || self.groups == 0 {
            return Err(Error::Config(
                "layers, frame rate, dim and groups must all be at least 1".into(),
            ));
        }
        if self.beam_width == 0 {
            return Err(Error::Config("beam width must be at least 1".into()));
        }
        if !self.layers.is_multiple_of(self.groups) {
            return Err(Error::Config(format!(
                "layers ({}) must be divisible by groups ({})",
                self.layers, self.groups
            )));
        }
        if !self.dim.is_multiple_of(self.groups) {
            return Err(Error::Config(format!(
                "dim ({}) must be divisible by groups ({})",
                self.dim, self.groups
            )));
        }
        let per_code = self.layers as u64 * self.frames_per_sec as u64;
        if self.bitrate == 0 || !self.bitrate.is_multiple_of(per_code) {
            return Err(Error::Config(format!(
                "bitrate ({}) must be divisible by layers x frame rate ({}) \
                 so each code gets a whole number of bits",
                self.bitrate, per_code
            )));
        }
        let bits = self.bitrate / per_code;
        if !(1..=31).contains(&bits) {
            return Err(Error::Config(format!(
                "bits per code ({bits}) must lie in 1..=31"
            )));
        }
        Ok(())
    }

    /// Bits spent on one codeword index: `R / (Nq * S)`.
    pub fn bits_per_code(&self) -> u32 {
        (self.bitrate / (self.layers as u64 * self.frames_per_sec as u64)) as u32
    }

    /// Codebook size `N = 2^(R / (Nq * S))`, exact integer arithmetic.
    pub fn codebook_size(&self) -> usize {
        1usize << self.bits_per_code()
    }

    /// VQ layers inside each group.
    pub fn layers_per_group(&self) -> usize {
        (self.layers / self.groups) as usize
    }

    /// Sub-vector dimension inside each group.
    pub fn group_dim(&self) -> usize {
        (self.dim / self.groups) as usize
    }

    /// Nominal bits for one frame: `Nq * log2(N) = R / S`.
    pub fn bits_per_frame(&self) -> u64 {
        self.layers as u64 * self.bits_per_code() as u64
    }

    /// Stored bytes for one frame (frames are byte-aligned in the bitstream).
    pub fn bytes_per_frame(&self) -> usize {
        (self.bits_per_frame() as usize).div_ceil(8)
    }

    pub fn kind(&self) -> QuantizerKind {
        match (self.groups > 1, self.beam_width > 1) {
            (false, false) => QuantizerKind::Rvq,
            (true, false) => QuantizerKind::GroupwiseRvq,
            (false, true) => QuantizerKind::BeamSearchRvq,
            (true, true) => QuantizerKind::GbRvq,
        }
    }
}
