//! Reference-based compression of the reads stream of FASTQ files.
//!
//! This crate carries everything that needs `std`: FASTQ/FASTA parsing,
//! the archive container, the multi-threaded pipeline, the `stats` tables,
//! the synthetic corpus generator with its brute-force oracles, and the
//! `amgc` command-line tool. The codec itself lives in [`amgc_core`].

pub mod container;
pub mod error;
pub mod fasta;
pub mod fastq;
pub mod index_cache;
pub mod pipeline;
pub mod simgen;
pub mod stats;

pub use amgc_core as core;
pub use error::{Error, Result};
pub use pipeline::{
    compress_fastq, compress_reads, decompress_bytes, CompressOptions, CompressReport, Decoded,
};
