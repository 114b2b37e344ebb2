//! Block codec: match outcomes of one read block to nine independent
//! substreams, and back to reads.
//!
//! Leaves are emitted depth-first, left to right, read after read. Every
//! stream is ordered by that leaf order:
//!
//! | stream       | content                                                  |
//! |--------------|----------------------------------------------------------|
//! | `PosEqual`   | duplicate flags of every aligned leaf's refpos           |
//! | `Sign`       | sign of each nonzero refpos delta                        |
//! | `MSB`        | MSB symbol of each refpos delta                          |
//! | `RestBit`    | bits below the MSB                                       |
//! | `MisposBits` | mismatch vectors of aligned leaves with mismatches       |
//! | `MisValues`  | read base at each mismatch, excluding the expected base  |
//! | `UnmapSeq`   | bases of unaligned leaves                                |
//! | `MatchMeta`  | read lengths, tree shapes, leaf kinds, strands           |
//! | `NMask`      | positions of `N` in each read                            |

use alloc::vec::Vec;

use crate::aligner::{expected_base, MatchNode, MatchOutcome, Strand};
use crate::base::{self, N_CODE};
use crate::error::CodecError;
use crate::mispos;
use crate::refindex::RefSequence;
use crate::refpos::{self, RefposStreams};
use crate::residual::{self, LeafKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    PosEqual,
    Sign,
    Msb,
    RestBit,
    MisposBits,
    MisValues,
    UnmapSeq,
    MatchMeta,
    NMask,
}

impl StreamKind {
    /// Container order.
    pub const ALL: [StreamKind; 9] = [
        StreamKind::PosEqual,
        StreamKind::Sign,
        StreamKind::Msb,
        StreamKind::RestBit,
        StreamKind::MisposBits,
        StreamKind::MisValues,
        StreamKind::UnmapSeq,
        StreamKind::MatchMeta,
        StreamKind::NMask,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::PosEqual => "PosEqual",
            StreamKind::Sign => "Sign",
            StreamKind::Msb => "MSB",
            StreamKind::RestBit => "RestBit",
            StreamKind::MisposBits => "MisposBits",
            StreamKind::MisValues => "MisValues",
            StreamKind::UnmapSeq => "UnmapSeq",
            StreamKind::MatchMeta => "MatchMeta",
            StreamKind::NMask => "NMask",
        }
    }

    pub fn is_refpos(self) -> bool {
        self.index() <= StreamKind::RestBit.index()
    }
}

/// The encoded substreams of one block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamSet {
    streams: [Vec<u8>; 9],
}

impl StreamSet {
    pub fn get(&self, kind: StreamKind) -> &[u8] {
        &self.streams[kind.index()]
    }

    pub fn set(&mut self, kind: StreamKind, data: Vec<u8>) {
        self.streams[kind.index()] = data;
    }

    pub fn iter(&self) -> impl Iterator<Item = (StreamKind, &[u8])> {
        StreamKind::ALL.iter().map(move |&k| (k, self.get(k)))
    }

    pub fn total_len(&self) -> usize {
        self.streams.iter().map(Vec::len).sum()
    }

    fn refpos(&self) -> RefposStreams {
        RefposStreams {
            pos_equal: self.get(StreamKind::PosEqual).to_vec(),
            sign: self.get(StreamKind::Sign).to_vec(),
            msb: self.get(StreamKind::Msb).to_vec(),
            rest: self.get(StreamKind::RestBit).to_vec(),
        }
    }
}

/// Encodes the outcomes of one block.
///
/// # Panics
///
/// If an outcome is inconsistent with the reference (a recorded mismatch
/// whose base equals the expected base).
pub fn encode_block(outcomes: &[MatchOutcome], reference: &RefSequence) -> StreamSet {
    let mut positions = Vec::new();
    let mut vectors: Vec<(u32, &[u32])> = Vec::new();
    let mut misvalues = Vec::new();
    let mut unmapped: Vec<&[u8]> = Vec::new();
    let mut reads = Vec::with_capacity(outcomes.len());

    for o in outcomes {
        o.root.for_each_leaf(&mut |_, leaf| match leaf {
            MatchNode::Match(m) => {
                positions.push(m.refpos);
                if !m.mispos.is_empty() {
                    vectors.push((m.len, &m.mispos));
                }
                for (&p, &v) in m.mispos.iter().zip(&m.misvalues) {
                    let e = expected_base(reference, m.refpos, m.strand, m.len, p);
                    assert!(
                        base::code_of(v) != Some(e),
                        "mismatch at offset {p} carries the expected base"
                    );
                    misvalues.push((e, v));
                }
            }
            MatchNode::Unmapped(b) => unmapped.push(b),
            MatchNode::Split(..) => unreachable!(),
        });
        reads.push(o.reconstruct(reference));
    }

    let rp = refpos::encode_refpos(&positions);
    let mut set = StreamSet::default();
    set.set(StreamKind::PosEqual, rp.pos_equal);
    set.set(StreamKind::Sign, rp.sign);
    set.set(StreamKind::Msb, rp.msb);
    set.set(StreamKind::RestBit, rp.rest);
    set.set(
        StreamKind::MisposBits,
        mispos::encode_mispos_sparse(vectors),
    );
    set.set(StreamKind::MisValues, residual::encode_misvalues(misvalues));
    set.set(StreamKind::UnmapSeq, residual::encode_unmapped(unmapped));
    set.set(StreamKind::MatchMeta, residual::encode_meta(outcomes));
    set.set(
        StreamKind::NMask,
        residual::encode_nmask(reads.iter().map(Vec::as_slice)),
    );
    set
}

/// Decodes `read_count` reads (ASCII, uppercase) from a block's streams.
pub fn decode_block(
    set: &StreamSet,
    read_count: usize,
    reference: &RefSequence,
) -> Result<Vec<Vec<u8>>, CodecError> {
    let skeletons = residual::decode_meta(set.get(StreamKind::MatchMeta), read_count)?;
    let leaves: Vec<Vec<(u32, LeafKind, Strand, u32)>> =
        skeletons.iter().map(|s| s.leaves()).collect();

    let aligned = leaves
        .iter()
        .flatten()
        .filter(|l| l.1 != LeafKind::Unmapped)
        .count();
    let positions = refpos::decode_refpos(&set.refpos(), aligned)?;

    let mismatched_lens: Vec<u32> = leaves
        .iter()
        .flatten()
        .filter(|l| l.1 == LeafKind::Mismatched)
        .map(|l| l.3)
        .collect();
    let mispos = mispos::decode_mispos_sparse(set.get(StreamKind::MisposBits), &mismatched_lens)?;
    if mispos.iter().any(Vec::is_empty) {
        return Err(CodecError::Corrupt("mismatched leaf without mismatches"));
    }

    // Expected bases at every mismatch, needed as misvalue contexts.
    let mut expected = Vec::new();
    {
        let mut pos_it = positions.iter();
        let mut mis_it = mispos.iter();
        for (_, kind, strand, len) in leaves.iter().flatten() {
            if *kind == LeafKind::Unmapped {
                continue;
            }
            let refpos = *pos_it.next().expect("counted above");
            if u64::from(refpos) + u64::from(*len) > reference.len() as u64 {
                return Err(CodecError::Corrupt("aligned segment beyond reference end"));
            }
            if *kind == LeafKind::Mismatched {
                for &p in mis_it.next().expect("counted above") {
                    expected.push(expected_base(reference, refpos, *strand, *len, p));
                }
            }
        }
    }
    let misvalues = residual::decode_misvalues(set.get(StreamKind::MisValues), &expected)?;

    let unmapped_total: usize = leaves
        .iter()
        .flatten()
        .filter(|l| l.1 == LeafKind::Unmapped)
        .map(|l| l.3 as usize)
        .sum();
    let unmapped = residual::decode_unmapped(set.get(StreamKind::UnmapSeq), unmapped_total)?;

    let lengths: Vec<u32> = skeletons.iter().map(|s| s.len()).collect();
    let nmask = residual::decode_nmask(set.get(StreamKind::NMask), &lengths)?;

    let mut pos_it = positions.into_iter();
    let mut mis_it = mispos.iter();
    let mut val_it = misvalues.into_iter();
    let mut unm_at = 0usize;
    let mut reads = Vec::with_capacity(read_count);
    for (read_leaves, ns) in leaves.iter().zip(nmask) {
        let mut read = Vec::new();
        for &(_, kind, strand, len) in read_leaves {
            match kind {
                LeafKind::Unmapped => {
                    read.extend_from_slice(&unmapped[unm_at..unm_at + len as usize]);
                    unm_at += len as usize;
                }
                LeafKind::Full | LeafKind::Mismatched => {
                    let refpos = pos_it.next().expect("counted above");
                    let start = read.len();
                    read.extend(
                        (0..len).map(|i| {
                            base::ascii_of(expected_base(reference, refpos, strand, len, i))
                        }),
                    );
                    if kind == LeafKind::Mismatched {
                        for &p in mis_it.next().expect("counted above") {
                            read[start + p as usize] = val_it.next().expect("counted above");
                        }
                    }
                }
            }
        }
        for p in ns {
            read[p as usize] = base::ascii_of(N_CODE);
        }
        reads.push(read);
    }
    Ok(reads)
}
