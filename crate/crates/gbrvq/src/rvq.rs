//! Greedy residual quantization through one stack of VQ layers.
//!
//! Layer 0 quantizes the input; every later layer quantizes the residual
//! left by the previous one. Reconstruction is the running sum of the
//! selected codewords, so `input = reconstruction + final_residual` holds
//! to f64 rounding.

use crate::config::QuantizerSpec;
use crate::error::{Error, Result};
use crate::vq::Codebook;

/// The per-frame compressed representation: one codeword index per layer,
/// laid out group-major (all of group 0's layers, then group 1's, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameCodes {
    codes: Vec<u32>,
}

impl FrameCodes {
    /// Validate externally supplied codes against a configuration.
    pub fn new(codes: Vec<u32>, spec: &QuantizerSpec) -> Result<Self> {
        if codes.len() != spec.layers as usize {
            return Err(Error::Dimension {
                expected: spec.layers as usize,
                got: codes.len(),
            });
        }
        let n = spec.codebook_size() as u32;
        if let Some(&bad) = codes.iter().find(|&&c| c >= n) {
            return Err(Error::Format(format!(
                "codeword index {bad} out of range for codebook size {n}"
            )));
        }
        Ok(Self { codes })
    }

    pub(crate) fn from_raw(codes: Vec<u32>) -> Self {
        Self { codes }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Result of encoding one frame through a layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct StackEncode {
    pub codes: Vec<u32>,
    pub residual: Vec<f64>,
    /// Squared norm of `residual`.
    pub err: f64,
}

fn check_stack(layers: &[Codebook], x: &[f64]) -> Result<()> {
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
    Ok(())
}

/// Quantize `x` greedily: each layer takes the nearest codeword to the
/// residual left by the layer before it.
pub fn encode_frame_greedy(layers: &[Codebook], x: &[f64]) -> Result<StackEncode> {
    check_stack(layers, x)?;
    let mut residual = x.to_vec();
    let mut codes = Vec::with_capacity(layers.len());
    let mut err = 0.0;
    for cb in layers {
        let (index, layer_err) = cb.nearest_index(&residual);
        for (r, c) in residual.iter_mut().zip(cb.entry(index)) {
            *r -= c;
        }
        codes.push(index as u32);
        err = layer_err;
    }
    Ok(StackEncode {
        codes,
        residual,
        err,
    })
}

/// Sum the codewords selected by the first `layers_used` layers.
pub fn decode_stack(layers: &[Codebook], codes: &[u32], layers_used: usize) -> Result<Vec<f64>> {
    if codes.len() != layers.len() {
        return Err(Error::Dimension {
            expected: layers.len(),
            got: codes.len(),
        });
    }
    if layers_used == 0 || layers_used > layers.len() {
        return Err(Error::Config(format!(
            "layers_used ({layers_used}) must lie in 1..={}",
            layers.len()
        )));
    }
    let dim = layers[0].dim();
    let mut out = vec![0.0; dim];
    for (cb, &code) in layers.iter().zip(codes).take(layers_used) {
        if code as usize >= cb.len() {
            return Err(Error::Format(format!(
                "codeword index {code} out of range for codebook size {}",
                cb.len()
            )));
        }
        for (o, c) in out.iter_mut().zip(cb.entry(code as usize)) {
            *o += c;
        }
    }
    Ok(out)
}
