use std::path::Path;

use amgc::container::{self, FIXED_HEADER_LEN};
use amgc::core::{AlignerConfig, KmerIndex, RefSequence};
use amgc::fasta::load_fasta_path;
use amgc::pipeline::{compress_fastq, compress_reads, decompress_bytes, CompressOptions};
use amgc::{simgen, Error};
use proptest::prelude::*;

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

#[test]
fn frozen_archive_decodes() {
    let r = load_fasta_path(&data("ref.fa")).unwrap();
    let archive = std::fs::read(data("reads.amgc")).unwrap();
    let fastq = std::fs::read(data("reads.fq")).unwrap();

    let decoded = decompress_bytes(&archive, &r, 2).unwrap();
    assert_eq!(decoded.header.blocks.len(), 2);
    let mut out = Vec::new();
    decoded.write_to(&mut out).unwrap();
    assert_eq!(out, fastq);
}

#[test]
fn frozen_archive_is_reproduced() {
    let r = load_fasta_path(&data("ref.fa")).unwrap();
    let archive = std::fs::read(data("reads.amgc")).unwrap();
    let fastq = std::fs::read(data("reads.fq")).unwrap();
    let opts = CompressOptions {
        block_size: 2000,
        threads: 1,
        passthrough: true,
        ..CompressOptions::default()
    };
    let idx = KmerIndex::build(&r, opts.aligner.k, opts.max_hits_per_kmer);
    let (bytes, _) = compress_fastq(&fastq[..], &r, &idx, &opts).unwrap();
    assert_eq!(bytes, archive);
}

fn fixture() -> (Vec<u8>, RefSequence) {
    let bases = simgen::random_reference(20_000, 77);
    let r = RefSequence::from_bases(&bases).unwrap();
    (bases, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_options_round_trip(
        seed in any::<u64>(),
        count in 0usize..300,
        k in 8usize..=12,
        min_len in prop_oneof![Just(usize::MAX), 12usize..60],
        ppm in 0u32..300_000,
        block_size in 1u64..20_000,
        threads in 1usize..4,
    ) {
        let (bases, r) = fixture();
        let sim = simgen::SimConfig {
            count,
            read_len_min: 1,
            read_len_max: 250,
            errors: simgen::ErrorProfile::tail_biased(0.02),
            burst_fraction: 0.1,
            revcomp_fraction: 0.5,
            n_rate: 0.01,
            random_fraction: 0.1,
            ..simgen::SimConfig::default()
        };
        let reads: Vec<Vec<u8>> = simgen::generate(&bases, &sim, seed)
            .unwrap()
            .into_iter()
            .map(|s| s.bases)
            .collect();
        let opts = CompressOptions {
            aligner: AlignerConfig { k, min_len, mismatch_ppm: ppm, ..AlignerConfig::default() },
            block_size,
            threads,
            ..CompressOptions::default()
        };
        let idx = KmerIndex::build(&r, k, opts.max_hits_per_kmer);
        let (bytes, report) = compress_reads(&reads, &r, &idx, &opts).unwrap();
        prop_assert_eq!(report.archive_bytes, bytes.len() as u64);
        let decoded = decompress_bytes(&bytes, &r, threads).unwrap();
        prop_assert_eq!(decoded.reads, reads);
    }
}

#[test]
fn every_truncation_is_rejected() {
    let (bases, r) = fixture();
    let sim = simgen::SimConfig {
        count: 60,
        ..simgen::SimConfig::default()
    };
    let reads: Vec<Vec<u8>> = simgen::generate(&bases, &sim, 1)
        .unwrap()
        .into_iter()
        .map(|s| s.bases)
        .collect();
    let opts = CompressOptions {
        block_size: 2000,
        threads: 1,
        ..CompressOptions::default()
    };
    let idx = KmerIndex::build(&r, 10, 16);
    let (bytes, _) = compress_reads(&reads, &r, &idx, &opts).unwrap();
    assert!(bytes.len() > FIXED_HEADER_LEN);
    for cut in 0..bytes.len() {
        match decompress_bytes(&bytes[..cut], &r, 1) {
            Err(e) => assert!(
                matches!(
                    e,
                    Error::Truncated | Error::BadMagic | Error::HeaderChecksum
                ),
                "cut {cut}: {e}"
            ),
            Ok(_) => panic!("truncation at {cut} accepted"),
        }
    }
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(decompress_bytes(&longer, &r, 1).is_err());
    assert!(container::read_header(&bytes, None).is_ok());
}
