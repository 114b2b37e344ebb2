//! Aligner and mispos coder checked against the brute-force oracles and
//! baseline coders in `simgen`.

use amgc::core::aligner::Aligner;
use amgc::core::mispos::{encode_mispos_with, MisposModel};
use amgc::core::{AlignerConfig, KmerIndex, MatchNode, RefSequence, Strand};
use amgc::simgen::{self, brute_force_align, ErrorProfile, SimConfig};
use proptest::prelude::*;

fn mismatches(read: &[u8], window: &[u8]) -> usize {
    read.iter()
        .zip(window)
        .filter(|(a, b)| a != b || **a == b'N')
        .count()
}

fn revcomp(s: &[u8]) -> Vec<u8> {
    s.iter()
        .rev()
        .map(|&b| match b {
            b'A' => b'T',
            b'C' => b'G',
            b'G' => b'C',
            b'T' => b'A',
            x => x,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aligner_is_sound(
        seed in any::<u64>(),
        len in 12usize..160,
        err in 0.0f64..0.15,
        ppm in 0u32..200_000,
    ) {
        let bases = simgen::random_reference(3_000, seed);
        let r = RefSequence::from_bases(&bases).unwrap();
        let idx = KmerIndex::build(&r, 10, 16);
        let cfg = AlignerConfig { mismatch_ppm: ppm, min_len: usize::MAX, ..AlignerConfig::default() };
        let aligner = Aligner::new(&idx, &r, cfg);
        let sim = SimConfig {
            count: 40,
            read_len_min: len,
            read_len_max: len,
            errors: ErrorProfile::tail_biased(err.min(0.05)),
            revcomp_fraction: 0.5,
            n_rate: 0.005,
            random_fraction: 0.2,
            ..SimConfig::default()
        };
        for read in simgen::generate(&bases, &sim, seed ^ 1).unwrap() {
            let t = cfg.threshold(len);
            let oracle = brute_force_align(&read.bases, &bases, t);
            if let Some(m) = aligner.align_segment(&read.bases) {
                // every reported hit is a real placement within the threshold
                let oracle = oracle.expect("aligner hit where the oracle finds none");
                prop_assert!(oracle.mismatches.len() <= m.mispos.len());
                let s = m.refpos as usize;
                let window = match m.strand {
                    Strand::Forward => bases[s..s + len].to_vec(),
                    Strand::Reverse => revcomp(&bases[s..s + len]),
                };
                prop_assert_eq!(mismatches(&read.bases, &window), m.mispos.len());
                prop_assert!(m.mispos.len() <= t);
            }
        }
    }
}

#[test]
fn exact_windows_always_align() {
    let bases = simgen::random_reference(20_000, 3);
    let r = RefSequence::from_bases(&bases).unwrap();
    let idx = KmerIndex::build(&r, 10, 16);
    let aligner = Aligner::new(&idx, &r, AlignerConfig::default());
    let sim = SimConfig {
        count: 500,
        errors: ErrorProfile::none(),
        revcomp_fraction: 0.5,
        ..SimConfig::default()
    };
    for read in simgen::generate(&bases, &sim, 8).unwrap() {
        let m = aligner.align_segment(&read.bases).expect("exact window");
        assert!(m.mispos.is_empty());
    }
}

#[test]
fn window_sum_beats_both_baselines() {
    let bases = simgen::random_reference(300_000, 31);
    let r = RefSequence::from_bases(&bases).unwrap();
    let idx = KmerIndex::build(&r, 10, 16);
    let aligner = Aligner::new(&idx, &r, AlignerConfig::default());
    let sim = SimConfig {
        count: 30_000,
        errors: ErrorProfile::tail_biased(0.01),
        ..SimConfig::default()
    };
    let mut vectors = Vec::new();
    for read in simgen::generate(&bases, &sim, 31).unwrap() {
        let o = aligner.align_read(&read.bases);
        for (_, leaf) in o.leaves() {
            if let MatchNode::Match(m) = leaf {
                if !m.mispos.is_empty() {
                    vectors.push(m.mispos_vector());
                }
            }
        }
    }
    vectors.truncate(10_000);
    assert_eq!(vectors.len(), 10_000);
    let size = |model| encode_mispos_with(vectors.iter().map(Vec::as_slice), model).len();
    let window = size(MisposModel::WindowSum);
    let order0 = size(MisposModel::Order0);
    let position = size(MisposModel::PositionIndex);
    assert!(window < order0, "{window} vs order-0 {order0}");
    assert!(window < position, "{window} vs position-index {position}");
}
