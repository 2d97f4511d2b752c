//! `gbrvq` command line: train codebooks, encode/decode corpora, inspect
//! usage statistics and complexity, and generate synthetic embeddings.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/format error,
//! 4 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use gbrvq::analysis;
use gbrvq::config::{EncodeMode, QuantizerSpec};
use gbrvq::corpus::{decode_corpus, encode_corpus};
use gbrvq::io;
use gbrvq::synth::generate_synthetic_corpus;
use gbrvq::training::{train, TrainConfig};

#[derive(Parser)]
#[command(name = "gbrvq", version, about = "Group-wise / beam-search RVQ toolkit")]
struct Cli {
    /// Worker threads for encode/decode/train (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Greedy,
    Beam,
}

#[derive(Subcommand)]
enum Command {
    /// Learn codebooks from an embedding file.
    Train {
        /// Input embedding file (CBRE).
        #[arg(long)]
        input: PathBuf,
        /// Target bitrate R in bits/second.
        #[arg(long)]
        bitrate: u64,
        /// Total VQ layers Nq (split evenly over groups).
        #[arg(long)]
        layers: u32,
        /// Independent sub-vector groups G.
        #[arg(long, default_value_t = 1)]
        groups: u32,
        /// Frames per second S.
        #[arg(long, default_value_t = 100)]
        frame_rate: u32,
        /// Training seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lloyd iterations per layer.
        #[arg(long, default_value_t = 25)]
        max_iters: u32,
        /// Relative distortion improvement below which a layer stops.
        #[arg(long, default_value_t = 1e-4)]
        rel_tol: f64,
        /// Optional EMA decay in (0,1]; pure Lloyd when omitted.
        #[arg(long)]
        ema_decay: Option<f64>,
        /// Codewords with fewer assignments are reseeded.
        #[arg(long, default_value_t = 1)]
        dead_code_threshold: u64,
        /// Output model file (CBRQ).
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode an embedding file into a bitstream.
    Encode {
        /// Model file (CBRQ).
        #[arg(long)]
        model: PathBuf,
        /// Input embedding file (CBRE).
        #[arg(long)]
        input: PathBuf,
        /// Search mode.
        #[arg(long, value_enum, default_value_t = Mode::Greedy)]
        mode: Mode,
        /// Beam width k (beam mode).
        #[arg(long, default_value_t = 4)]
        beam_k: u32,
        /// Output bitstream file (CBRB).
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON file for codeword usage statistics.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Reconstruct embeddings from a bitstream.
    Decode {
        /// Model file (CBRQ); must match the bitstream's checksum echo.
        #[arg(long)]
        model: PathBuf,
        /// Input bitstream file (CBRB).
        #[arg(long)]
        input: PathBuf,
        /// Decode only the first n layers (default: all; must divide by G).
        #[arg(long)]
        layers_used: Option<u32>,
        /// Output embedding file (CBRE).
        #[arg(long)]
        out: PathBuf,
    },
    /// Entropy-bitrate report for an encoded bitstream.
    Stats {
        #[arg(long)]
        model: PathBuf,
        /// Input bitstream file (CBRB).
        #[arg(long)]
        input: PathBuf,
        /// Emit machine-readable JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Parameter and complexity accounting for a configuration.
    Complexity {
        #[arg(long)]
        bitrate: u64,
        #[arg(long)]
        layers: u32,
        #[arg(long)]
        dim: u32,
        #[arg(long, default_value_t = 100)]
        frame_rate: u32,
        #[arg(long, default_value_t = 1)]
        groups: u32,
        #[arg(long, default_value_t = 1)]
        beam_k: u32,
        #[arg(long)]
        json: bool,
    },
    /// Generate a deterministic Gaussian-mixture embedding corpus.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 16)]
        clusters: usize,
        #[arg(long, default_value_t = 0.3)]
        spread: f64,
        #[arg(long, default_value_t = 100)]
        frame_rate: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Errors only if a global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config = err
                .chain()
                .filter_map(|c| c.downcast_ref::<gbrvq::Error>())
                .any(|e| e.is_config());
            if config {
                ExitCode::from(4)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Train {
            input,
            bitrate,
            layers,
            groups,
            frame_rate,
            seed,
            max_iters,
            rel_tol,
            ema_decay,
            dead_code_threshold,
            out,
        } => {
            let frames = io::read_embeddings(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let spec = QuantizerSpec {
                bitrate,
                layers,
                frames_per_sec: frame_rate,
                dim: frames.dim() as u32,
                groups,
                beam_width: 1,
            };
            let config = TrainConfig {
                max_iters,
                rel_tol,
                ema_decay,
                dead_code_threshold,
                ..TrainConfig::new(spec, seed)
            };
            let model = train(&config, &frames)?;
            let checksum = io::write_model(&out, &model, seed)?;

            println!(
                "trained {} model: N={}, {} frames, corpus {:016x}",
                spec.kind(),
                spec.codebook_size(),
                frames.len(),
                frames.fingerprint()
            );
            if let Some(meta) = &model.training_meta {
                println!("group layer iters reseeds distortion");
                let per_group = spec.layers_per_group();
                for (row, layer) in meta.layers.iter().enumerate() {
                    println!(
                        "{:>5} {:>5} {:>5} {:>7} {:.6}",
                        row / per_group,
                        row % per_group,
                        layer.iterations,
                        layer.reseed_iters.len(),
                        layer.final_distortion
                    );
                }
            }
            println!("wrote {} (checksum {checksum:08x})", out.display());
            Ok(())
        }

        Command::Encode {
            model,
            input,
            mode,
            beam_k,
            out,
            stats,
        } => {
            let loaded = io::read_model(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let frames = io::read_embeddings(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let mode = match mode {
                Mode::Greedy => EncodeMode::Greedy,
                Mode::Beam => EncodeMode::Beam { width: beam_k },
            };
            let (codes, usage) = encode_corpus(&loaded.model, &frames, mode)?;
            let mut spec = *loaded.model.spec();
            spec.beam_width = mode.beam_width();
            let stream = io::Bitstream {
                spec,
                mode,
                model_checksum: loaded.checksum,
                codes,
            };
            io::write_bitstream(&out, &stream)?;
            println!(
                "encoded {} frames at {} bits/frame -> {}",
                frames.len(),
                spec.bits_per_frame(),
                out.display()
            );
            if let Some(stats_path) = stats {
                let doc = usage_json(&usage, &spec)?;
                std::fs::write(&stats_path, serde_json::to_string_pretty(&doc)?)?;
                println!("wrote usage stats to {}", stats_path.display());
            }
            Ok(())
        }

        Command::Decode {
            model,
            input,
            layers_used,
            out,
        } => {
            let loaded = io::read_model(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let stream = io::read_bitstream(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            stream.check_model(&loaded)?;
            let layers_used = layers_used.unwrap_or(loaded.model.spec().layers);
            let frames = decode_corpus(&loaded.model, &stream.codes, layers_used)?;
            io::write_embeddings(&out, &frames)?;
            println!(
                "decoded {} frames using {layers_used} layers -> {}",
                frames.len(),
                out.display()
            );
            Ok(())
        }

        Command::Stats { model, input, json } => {
            let loaded = io::read_model(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let stream = io::read_bitstream(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            stream.check_model(&loaded)?;
            let mut usage = analysis::UsageStats::new(&stream.spec);
            for fc in &stream.codes {
                usage.record(fc);
            }
            let doc = usage_json(&usage, &stream.spec)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                let spec = &stream.spec;
                println!("frames            {}", usage.total_frames());
                println!(
                    "entropy bitrate   {:.1} bits/sec",
                    doc["entropy_bits_per_sec"].as_f64().unwrap_or(0.0)
                );
                println!("nominal bitrate   {} bits/sec", spec.bitrate);
                println!(
                    "padded bitrate    {} bits/sec",
                    spec.bytes_per_frame() as u64 * 8 * spec.frames_per_sec as u64
                );
                println!(
                    "utilization       {:.4}",
                    doc["utilization"].as_f64().unwrap_or(0.0)
                );
            }
            Ok(())
        }

        Command::Complexity {
            bitrate,
            layers,
            dim,
            frame_rate,
            groups,
            beam_k,
            json,
        } => {
            let spec = QuantizerSpec {
                bitrate,
                layers,
                frames_per_sec: frame_rate,
                dim,
                groups,
                beam_width: beam_k,
            };
            let report = analysis::complexity_report(&spec)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            Ok(())
        }

        Command::Synth {
            seed,
            frames,
            dim,
            clusters,
            spread,
            frame_rate,
            out,
        } => {
            let corpus = generate_synthetic_corpus(seed, frames, dim, clusters, spread)?
                .with_frames_per_sec(frame_rate);
            io::write_embeddings(&out, &corpus)?;
            println!("wrote {frames} frames of dim {dim} to {}", out.display());
            Ok(())
        }
    }
}

fn usage_json(
    usage: &analysis::UsageStats,
    spec: &QuantizerSpec,
) -> anyhow::Result<serde_json::Value> {
    let entropy = analysis::entropy_bitrate(usage, spec.frames_per_sec)?;
    let per_layer: Vec<f64> = (0..usage.rows())
        .map(|row| {
            let counts = usage.layer_counts(row);
            let total = usage.total_frames() as f64;
            counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / total;
                    -p * p.log2()
                })
                .sum::<f64>()
                + 0.0
        })
        .collect();
    Ok(serde_json::json!({
        "total_frames": usage.total_frames(),
        "entropy_bits_per_sec": entropy,
        "nominal_bits_per_sec": spec.bitrate,
        "padded_bits_per_sec": spec.bytes_per_frame() as u64 * 8 * spec.frames_per_sec as u64,
        "utilization": analysis::utilization(entropy, spec.bitrate),
        "per_layer_entropy_bits": per_layer,
        "usage": usage,
    }))
}
