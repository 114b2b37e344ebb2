//! Core algorithms for reference-based compression of sequencing reads.
//!
//! The crate is `no_std` (it needs `alloc`). It contains everything that is a
//! pure function of bytes already in memory:
//!
//! * [`coder`]: adaptive binary and m-ary range coding.
//! * [`refindex`]: 2-bit packed reference and the integer k-mer index.
//! * [`aligner`]: seed-and-extend alignment with recursive split matching.
//! * [`refpos`], [`mispos`], [`residual`]: the per-stream codecs.
//! * [`block`]: glue that turns a block of reads into a [`block::StreamSet`] and back.
//!
//! File formats, the archive container and the command line live in the
//! `amgc` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aligner;
pub mod base;
pub mod bitplane;
pub mod block;
pub mod coder;
pub mod error;
pub mod mispos;
pub mod read;
pub mod refindex;
pub mod refpos;
pub mod residual;

pub use aligner::{AlignerConfig, MatchNode, MatchOutcome, SegmentMatch, Strand};
pub use block::{StreamKind, StreamSet};
pub use error::{CodecError, RefError};
pub use read::{split_blocks, BlockSplitter, ReadBlock, ReadRecord};
pub use refindex::{KmerIndex, RefSequence};
