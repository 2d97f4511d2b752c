//! Property tests for the search, encode and accounting invariants.

use proptest::prelude::*;

use gbrvq::analysis::{complexity_report, entropy_bitrate, UsageStats};
use gbrvq::beam::encode_frame_beam;
use gbrvq::config::{EncodeMode, QuantizerSpec};
use gbrvq::corpus::{encode_corpus, Frames};
use gbrvq::grouping::RvqModel;
use gbrvq::io::{pack_frame, unpack_frame};
use gbrvq::rvq::encode_frame_greedy;
use gbrvq::vq::{squared_distance, Codebook};

fn finite_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, dim)
}

fn codebook(n: usize, dim: usize) -> impl Strategy<Value = Codebook> {
    prop::collection::vec(-100.0f64..100.0, n * dim)
        .prop_map(move |flat| Codebook::from_flat(dim, flat).unwrap())
}

fn stack(layers: usize, n: usize, dim: usize) -> impl Strategy<Value = Vec<Codebook>> {
    prop::collection::vec(codebook(n, dim), layers)
}

proptest! {
    #[test]
    fn nearest_is_global_argmin(
        (cb, x) in (1usize..24, 1usize..8).prop_flat_map(|(n, dim)| {
            (codebook(n, dim), finite_vec(dim))
        })
    ) {
        let hit = cb.nearest(&x).unwrap();
        for entry in cb.entries() {
            prop_assert!(hit.err <= squared_distance(&x, entry).unwrap());
        }
    }

    #[test]
    fn top_k_is_a_stable_prefix(
        (cb, x, k) in (2usize..24, 1usize..6).prop_flat_map(|(n, dim)| {
            (codebook(n, dim), finite_vec(dim), 2usize..=24)
        })
    ) {
        let full = cb.top_k(&x, k).unwrap();
        for shorter in 1..full.len() {
            let prefix = cb.top_k(&x, shorter).unwrap();
            prop_assert_eq!(&full[..shorter], prefix.as_slice());
        }
    }

    #[test]
    fn nearest_ignores_appended_duplicates(
        (cb, x, dups) in (1usize..12, 1usize..6).prop_flat_map(|(n, dim)| {
            (codebook(n, dim), finite_vec(dim), prop::collection::vec(0usize..n, 1..6))
        })
    ) {
        let base = cb.nearest(&x).unwrap();
        let mut rows: Vec<Vec<f64>> = cb.entries().map(|e| e.to_vec()).collect();
        for d in dups {
            rows.push(cb.entry(d).to_vec());
        }
        let extended = Codebook::from_rows(rows).unwrap();
        let again = extended.nearest(&x).unwrap();
        prop_assert_eq!(base.index, again.index);
        prop_assert_eq!(base.err, again.err);
    }

    #[test]
    fn kernel_matches_naive_reference(
        (a, b) in (1usize..=1024).prop_flat_map(|dim| (finite_vec(dim), finite_vec(dim)))
    ) {
        let fast = squared_distance(&a, &b).unwrap();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        prop_assert!((fast - naive).abs() <= 1e-6 * naive.max(1e-30));
    }

    #[test]
    fn greedy_encode_telescopes(
        (layers, x) in (1usize..4, 2usize..16, 1usize..6)
            .prop_flat_map(|(nl, n, dim)| (stack(nl, n, dim), finite_vec(dim)))
    ) {
        let enc = encode_frame_greedy(&layers, &x).unwrap();
        let recon = gbrvq::rvq::decode_stack(&layers, &enc.codes, layers.len()).unwrap();
        let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for ((xi, ri), qi) in x.iter().zip(&enc.residual).zip(&recon) {
            prop_assert!((xi - (qi + ri)).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn beam_width_one_is_greedy(
        (layers, x) in (1usize..4, 2usize..12, 1usize..5)
            .prop_flat_map(|(nl, n, dim)| (stack(nl, n, dim), finite_vec(dim)))
    ) {
        let beam = encode_frame_beam(&layers, &x, 1).unwrap();
        let greedy = encode_frame_greedy(&layers, &x).unwrap();
        prop_assert_eq!(beam.codes, greedy.codes);
        prop_assert_eq!(beam.residual, greedy.residual);
    }

    #[test]
    fn entropy_bounded_by_nominal_rate(
        counts in prop::collection::vec(prop::collection::vec(0u64..50, 8), 1..4)
    ) {
        let totals: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
        prop_assume!(totals.iter().all(|&t| t > 0));
        // Normalize rows to a common frame count by scaling each row's
        // counts; entropy only depends on proportions, so instead give
        // every layer its own stats and sum the bounds.
        let layers = counts.len() as u64;
        let mut total_rate = 0.0;
        for row in &counts {
            let t: u64 = row.iter().sum();
            let stats = UsageStats::from_counts(vec![row.clone()], t).unwrap();
            total_rate += entropy_bitrate(&stats, 100).unwrap();
        }
        // Each layer contributes at most log2(8) = 3 bits per frame.
        prop_assert!(total_rate <= layers as f64 * 3.0 * 100.0 + 1e-9);
    }

    #[test]
    fn pack_unpack_round_trip(
        (bits, codes) in (1u32..=16).prop_flat_map(|bits| {
            let max = (1u64 << bits) as u32;
            (Just(bits), prop::collection::vec(0u32..max, 1..12))
        })
    ) {
        let layers = codes.len() as u32;
        let spec = QuantizerSpec {
            bitrate: layers as u64 * 100 * bits as u64,
            layers,
            frames_per_sec: 100,
            dim: layers,
            groups: 1,
            beam_width: 1,
        };
        prop_assume!(spec.validate().is_ok());
        let packed = pack_frame(&codes, bits);
        prop_assert_eq!(packed.len(), spec.bytes_per_frame());
        let back = unpack_frame(&packed, &spec).unwrap();
        prop_assert_eq!(back.codes(), codes.as_slice());
    }

    #[test]
    fn complexity_report_matches_naive_formulas(
        (groups, layers_pg, bits, dim_pg, s, k) in
            (1u64..5, 1u64..5, 1u64..12, 1u64..65, 1u64..200, 1u64..9)
    ) {
        let spec = QuantizerSpec {
            bitrate: groups * layers_pg * s * bits,
            layers: (groups * layers_pg) as u32,
            frames_per_sec: s as u32,
            dim: (groups * dim_pg) as u32,
            groups: groups as u32,
            beam_width: k as u32,
        };
        spec.validate().unwrap();
        let r = complexity_report(&spec).unwrap();
        let n = 1u64 << bits;
        prop_assert_eq!(r.params, groups * layers_pg * dim_pg * n);
        prop_assert_eq!(r.macs_greedy, groups * layers_pg * (dim_pg + 1) * n * s);
        let numer = 1 + k * (layers_pg - 1);
        let expect_beam =
            ((r.macs_greedy as u128 * numer as u128 * 2 + layers_pg as u128)
                / (2 * layers_pg as u128)) as u64;
        prop_assert_eq!(r.macs_beam, expect_beam);
        prop_assert_eq!(r.bits_per_frame, groups * layers_pg * bits);
    }
}

#[test]
fn corpus_encode_is_thread_count_independent() {
    let spec = QuantizerSpec {
        bitrate: 4 * 100 * 4,
        layers: 4,
        frames_per_sec: 100,
        dim: 8,
        groups: 2,
        beam_width: 2,
    };
    let corpus = gbrvq::synth::generate_synthetic_corpus(17, 500, 8, 16, 0.4).unwrap();
    let model = gbrvq::training::train(&gbrvq::training::TrainConfig::new(spec, 5), &corpus)
        .unwrap();

    let mut runs = Vec::new();
    for threads in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let out = pool
            .install(|| encode_corpus(&model, &corpus, EncodeMode::Beam { width: 2 }))
            .unwrap();
        runs.push(out);
    }
    assert_eq!(runs[0].0, runs[1].0);
    assert_eq!(runs[0].0, runs[2].0);
    assert_eq!(runs[0].1, runs[1].1);
    assert_eq!(runs[0].1, runs[2].1);
}

#[test]
fn grouped_beam_helper_matches_model_encode() {
    let spec = QuantizerSpec {
        bitrate: 4 * 100 * 4,
        layers: 4,
        frames_per_sec: 100,
        dim: 8,
        groups: 2,
        beam_width: 4,
    };
    let corpus = gbrvq::synth::generate_synthetic_corpus(29, 300, 8, 16, 0.4).unwrap();
    let model = gbrvq::training::train(&gbrvq::training::TrainConfig::new(spec, 6), &corpus)
        .unwrap();
    for frame in corpus.iter().take(50) {
        let via_helper = gbrvq::beam::encode_frame_gb(&model, frame, 4).unwrap();
        let via_model = model
            .encode_frame(frame, EncodeMode::Beam { width: 4 })
            .unwrap();
        assert_eq!(via_helper, via_model);
    }
}

#[test]
fn corpus_encode_edge_cases() {
    let spec = QuantizerSpec {
        bitrate: 2 * 100 * 3,
        layers: 2,
        frames_per_sec: 100,
        dim: 4,
        groups: 1,
        beam_width: 1,
    };
    let corpus = gbrvq::synth::generate_synthetic_corpus(3, 64, 4, 8, 0.3).unwrap();
    let model = gbrvq::training::train(&gbrvq::training::TrainConfig::new(spec, 2), &corpus)
        .unwrap();

    // Empty corpus: no codes, zero counts.
    let empty = Frames::new(4, 100);
    let (codes, usage) = encode_corpus(&model, &empty, EncodeMode::Greedy).unwrap();
    assert!(codes.is_empty());
    assert_eq!(usage.total_frames(), 0);

    // One frame: exactly one count per layer.
    let one = Frames::from_vecs(4, vec![corpus.frame(0).to_vec()]).unwrap();
    let (codes, usage) = encode_corpus(&model, &one, EncodeMode::Greedy).unwrap();
    assert_eq!(codes.len(), 1);
    for row in 0..usage.rows() {
        assert_eq!(usage.layer_counts(row).iter().sum::<u64>(), 1);
    }

    // Dim mismatch is refused.
    let wrong = Frames::new(3, 100);
    assert!(encode_corpus(&model, &wrong, EncodeMode::Greedy).is_err());
}

/// On greedy-encoded streams from a trained model, reconstruction error
/// must shrink (or hold) as more layers are used.
#[test]
fn prefix_decode_error_non_increasing_on_trained_model() {
    let spec = QuantizerSpec {
        bitrate: 4 * 100 * 5,
        layers: 4,
        frames_per_sec: 100,
        dim: 8,
        groups: 1,
        beam_width: 1,
    };
    let corpus = gbrvq::synth::generate_synthetic_corpus(23, 2_000, 8, 64, 0.4).unwrap();
    let model = gbrvq::training::train(&gbrvq::training::TrainConfig::new(spec, 3), &corpus)
        .unwrap();
    let (codes, _) = encode_corpus(&model, &corpus, EncodeMode::Greedy).unwrap();

    let mut prev = f64::INFINITY;
    for layers_used in 1..=4u32 {
        let mut total = 0.0;
        for (fc, frame) in codes.iter().zip(corpus.iter()) {
            let recon = model.decode_frame(fc, layers_used).unwrap();
            total += frame
                .iter()
                .zip(&recon)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        assert!(
            total <= prev + 1e-9,
            "error grew from {prev} to {total} at {layers_used} layers"
        );
        prev = total;
    }
}

/// Usage histograms from an encode must sum to the frame count per layer.
#[test]
fn usage_histograms_account_for_every_frame() {
    let spec = QuantizerSpec {
        bitrate: 3 * 100 * 4,
        layers: 3,
        frames_per_sec: 100,
        dim: 6,
        groups: 3,
        beam_width: 1,
    };
    let corpus = gbrvq::synth::generate_synthetic_corpus(8, 333, 6, 8, 0.5).unwrap();
    let model: RvqModel =
        gbrvq::training::train(&gbrvq::training::TrainConfig::new(spec, 9), &corpus).unwrap();
    let (_, usage) = encode_corpus(&model, &corpus, EncodeMode::Greedy).unwrap();
    assert_eq!(usage.total_frames(), 333);
    for row in 0..usage.rows() {
        assert_eq!(usage.layer_counts(row).iter().sum::<u64>(), 333);
    }
}
