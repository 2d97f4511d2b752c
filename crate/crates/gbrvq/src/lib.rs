//! Residual vector quantization with group splitting and beam search.
//!
//! The quantizer stack compresses fixed-dimension embedding frames into
//! per-layer codeword indices. Four modes fall out of the configuration:
//! plain RVQ (one group, width-1 search), group-wise RVQ (independent
//! sub-vector quantizers), beam-search RVQ (width-k path search through
//! the layer cascade), and the combination of both.
//!
//! The crate covers the full offline pipeline: codebook training via
//! residual-cascade k-means ([`training`]), corpus encoding and decoding
//! ([`corpus`], [`grouping`]), codeword-usage and entropy-bitrate analysis
//! ([`analysis`]), and bit-exact binary file formats ([`io`]).

pub mod analysis;
pub mod beam;
pub mod config;
pub mod corpus;
pub mod error;
pub mod grouping;
pub mod io;
pub mod rng;
pub mod rvq;
pub mod synth;
pub mod training;
pub mod vq;

pub use analysis::{ComplexityReport, UsageStats};
pub use config::{EncodeMode, QuantizerKind, QuantizerSpec};
pub use corpus::Frames;
pub use error::{Error, Result};
pub use grouping::{RvqModel, TrainingMeta};
pub use rvq::FrameCodes;
pub use training::TrainConfig;
pub use vq::Codebook;
