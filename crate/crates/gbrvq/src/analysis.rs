//! Codeword-usage statistics, entropy-coded bitrate estimation, and the
//! complexity/parameter report.
//!
//! The entropy figure is the rate an ideal entropy coder would reach for
//! the observed per-layer codeword distributions; no coder is implemented.
//! It can never exceed the nominal bitrate, with equality exactly at
//! uniform usage.

use serde::Serialize;

use crate::beam::{beam_macs_factor, BeamFactor};
use crate::config::QuantizerSpec;
use crate::error::{Error, Result};
use crate::grouping::{macs_per_second, parameter_count};
use crate::rvq::FrameCodes;

/// Per-(group, layer) histograms of emitted codeword indices, group-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UsageStats {
    counts: Vec<Vec<u64>>,
    total_frames: u64,
}

impl UsageStats {
    pub fn new(spec: &QuantizerSpec) -> Self {
        Self {
            counts: vec![vec![0; spec.codebook_size()]; spec.layers as usize],
            total_frames: 0,
        }
    }

    pub fn record(&mut self, codes: &FrameCodes) {
        debug_assert_eq!(codes.len(), self.counts.len());
        for (layer, &code) in codes.codes().iter().enumerate() {
            self.counts[layer][code as usize] += 1;
        }
        self.total_frames += 1;
    }

    /// Histogram addition; associative and commutative, so concurrent
    /// encoders can reduce their local stats in any grouping.
    pub fn merge(&mut self, other: &UsageStats) -> Result<()> {
        if self.counts.len() != other.counts.len()
            || self.counts.first().map(Vec::len) != other.counts.first().map(Vec::len)
        {
            return Err(Error::Config(
                "cannot merge usage stats of different shapes".into(),
            ));
        }
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
        self.total_frames += other.total_frames;
        Ok(())
    }

    pub fn total_frames(&self) -> u64 {
        self.total_frames
    }

    /// Histogram for one (group-major) layer row.
    pub fn layer_counts(&self, row: usize) -> &[u64] {
        &self.counts[row]
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    /// Build directly from histograms (row per layer, group-major).
    pub fn from_counts(counts: Vec<Vec<u64>>, total_frames: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty("usage stats need at least one layer"));
        }
        for row in &counts {
            let sum: u64 = row.iter().sum();
            if sum != total_frames {
                return Err(Error::Config(format!(
                    "layer histogram sums to {sum}, expected {total_frames}"
                )));
            }
        }
        Ok(Self {
            counts,
            total_frames,
        })
    }
}

/// Shannon entropy in bits of one empirical codeword distribution.
fn layer_entropy(counts: &[u64], total: u64) -> f64 {
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0) // 0 * log2(0) := 0
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Estimated entropy-coded rate in bits per second: the summed per-layer
/// entropies of the observed codeword distributions, times the frame rate.
pub fn entropy_bitrate(stats: &UsageStats, frames_per_sec: u32) -> Result<f64> {
    if stats.total_frames == 0 {
        return Err(Error::Empty("usage stats cover no frames"));
    }
    let bits_per_frame: f64 = stats
        .counts
        .iter()
        .map(|row| layer_entropy(row, stats.total_frames))
        .sum();
    // `-p log2 p` at p = 1 yields -0.0; normalize the sign.
    Ok(bits_per_frame * frames_per_sec as f64 + 0.0)
}

/// Entropy rate over nominal rate; 1.0 means perfectly uniform usage.
pub fn utilization(entropy_bps: f64, nominal_bps: u64) -> f64 {
    entropy_bps / nominal_bps as f64
}

pub fn utilization_ratio(stats: &UsageStats, spec: &QuantizerSpec) -> Result<f64> {
    Ok(utilization(
        entropy_bitrate(stats, spec.frames_per_sec)?,
        spec.bitrate,
    ))
}

/// Storage and compute accounting for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    pub kind: String,
    pub codebook_size: u64,
    pub params: u64,
    pub macs_greedy: u64,
    pub macs_beam: u64,
    pub beam_factor: String,
    pub beam_factor_value: f64,
    pub bits_per_frame: u64,
    /// Bits per frame after byte-aligning each frame in the bitstream.
    pub padded_bits_per_frame: u64,
    pub nominal_bitrate: u64,
    pub padded_bitrate: u64,
}

/// Pure arithmetic over the configuration: parameters, greedy and
/// beam-adjusted macs, and both exact and byte-padded frame costs.
pub fn complexity_report(spec: &QuantizerSpec) -> Result<ComplexityReport> {
    spec.validate()?;
    let factor: BeamFactor = beam_macs_factor(spec)?;
    let macs_greedy = macs_per_second(spec)?;
    let padded_bits = spec.bytes_per_frame() as u64 * 8;
    Ok(ComplexityReport {
        kind: spec.kind().to_string(),
        codebook_size: spec.codebook_size() as u64,
        params: parameter_count(spec)?,
        macs_greedy,
        macs_beam: factor.apply(macs_greedy)?,
        beam_factor: factor.to_string(),
        beam_factor_value: factor.as_f64(),
        bits_per_frame: spec.bits_per_frame(),
        padded_bits_per_frame: padded_bits,
        nominal_bitrate: spec.bitrate,
        padded_bitrate: padded_bits * spec.frames_per_sec as u64,
    })
}

impl std::fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "quantizer        {}", self.kind)?;
        writeln!(f, "codebook size    {}", self.codebook_size)?;
        writeln!(f, "parameters       {}", self.params)?;
        writeln!(f, "macs/sec greedy  {}", self.macs_greedy)?;
        writeln!(
            f,
            "macs/sec beam    {} (factor {})",
            self.macs_beam, self.beam_factor
        )?;
        writeln!(
            f,
            "bits/frame       {} ({} padded)",
            self.bits_per_frame, self.padded_bits_per_frame
        )?;
        write!(
            f,
            "bitrate          {} nominal, {} padded",
            self.nominal_bitrate, self.padded_bitrate
        )
    }
}
