//! Everything besides positions and mismatch vectors that a decoder needs:
//! per-read match structure, mismatch bases, unaligned bases and the `N` mask.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::aligner::{MatchNode, MatchOutcome, Strand};
use crate::base::{self, ALPHABET, N_CODE};
use crate::bitplane::MagnitudeModel;
use crate::coder::{BitContext, Decoder, Encoder, SymbolContext};
use crate::error::CodecError;

/// Tree depth beyond which node-kind contexts are shared.
const MAX_DEPTH_CTX: usize = 3;

/// Node symbols of the serialized match tree, in pre-order.
const NODE_FULL: usize = 0;
const NODE_MISMATCHED: usize = 1;
const NODE_SPLIT: usize = 2;
const NODE_UNMAPPED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Aligned without mismatches; no mispos vector is stored.
    Full,
    Mismatched,
    Unmapped,
}

/// Match tree with everything except positions and bases: what the
/// `MatchMeta` stream carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Skeleton {
    Leaf {
        kind: LeafKind,
        /// Meaningless for unmapped leaves (always forward).
        strand: Strand,
        len: u32,
    },
    Split(Box<Skeleton>, Box<Skeleton>),
}

impl Skeleton {
    pub fn from_node(node: &MatchNode) -> Self {
        match node {
            MatchNode::Match(m) => Skeleton::Leaf {
                kind: if m.mispos.is_empty() {
                    LeafKind::Full
                } else {
                    LeafKind::Mismatched
                },
                strand: m.strand,
                len: m.len,
            },
            MatchNode::Unmapped(b) => Skeleton::Leaf {
                kind: LeafKind::Unmapped,
                strand: Strand::Forward,
                len: b.len() as u32,
            },
            MatchNode::Split(l, r) => {
                Skeleton::Split(Box::new(Self::from_node(l)), Box::new(Self::from_node(r)))
            }
        }
    }

    pub fn len(&self) -> u32 {
        match self {
            Skeleton::Leaf { len, .. } => *len,
            Skeleton::Split(l, r) => l.len() + r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(offset, kind, strand, len)` for each leaf, left to right.
    pub fn leaves(&self) -> Vec<(u32, LeafKind, Strand, u32)> {
        let mut out = Vec::new();
        self.collect(0, &mut out);
        out
    }

    fn collect(&self, offset: u32, out: &mut Vec<(u32, LeafKind, Strand, u32)>) {
        match self {
            Skeleton::Leaf { kind, strand, len } => out.push((offset, *kind, *strand, *len)),
            Skeleton::Split(l, r) => {
                l.collect(offset, out);
                r.collect(offset + l.len(), out);
            }
        }
    }
}

struct MetaModels {
    same_len: BitContext,
    len: MagnitudeModel,
    node: Vec<SymbolContext>,
    strand: BitContext,
}

impl MetaModels {
    fn new() -> Self {
        MetaModels {
            same_len: BitContext::new(),
            len: MagnitudeModel::default(),
            node: vec![SymbolContext::new(4); MAX_DEPTH_CTX + 1],
            strand: BitContext::new(),
        }
    }
}

/// Serializes read lengths and match trees. Lengths are coded as a
/// "same as previous read" flag, and in full only when they change.
pub fn encode_meta(outcomes: &[MatchOutcome]) -> Vec<u8> {
    let mut m = MetaModels::new();
    let mut enc = Encoder::new();
    let mut prev_len = 0u32;
    for o in outcomes {
        let len = o.read_length as u32;
        enc.encode_bit(&mut m.same_len, len == prev_len);
        if len != prev_len {
            m.len.encode(&mut enc, len);
        }
        prev_len = len;
        encode_node(&mut enc, &mut m, &o.root, 0);
    }
    enc.finish()
}

fn encode_node(enc: &mut Encoder, m: &mut MetaModels, node: &MatchNode, depth: usize) {
    let ctx = &mut m.node[depth.min(MAX_DEPTH_CTX)];
    match node {
        MatchNode::Match(s) => {
            let sym = if s.mispos.is_empty() {
                NODE_FULL
            } else {
                NODE_MISMATCHED
            };
            enc.encode_symbol(ctx, sym);
            enc.encode_bit(&mut m.strand, s.strand == Strand::Reverse);
        }
        MatchNode::Unmapped(_) => enc.encode_symbol(ctx, NODE_UNMAPPED),
        MatchNode::Split(l, r) => {
            enc.encode_symbol(ctx, NODE_SPLIT);
            encode_node(enc, m, l, depth + 1);
            encode_node(enc, m, r, depth + 1);
        }
    }
}

/// Decodes `read_count` skeletons.
pub fn decode_meta(data: &[u8], read_count: usize) -> Result<Vec<Skeleton>, CodecError> {
    let mut m = MetaModels::new();
    let mut dec = Decoder::new(data)?;
    let mut prev_len = 0u32;
    let mut out = Vec::with_capacity(read_count);
    for _ in 0..read_count {
        let len = if dec.decode_bit(&mut m.same_len)? {
            prev_len
        } else {
            m.len.decode(&mut dec)?
        };
        if len == 0 {
            return Err(CodecError::Corrupt("zero-length read"));
        }
        prev_len = len;
        out.push(decode_node(&mut dec, &mut m, len, 0)?);
    }
    dec.finish()?;
    Ok(out)
}

fn decode_node(
    dec: &mut Decoder<'_>,
    m: &mut MetaModels,
    len: u32,
    depth: usize,
) -> Result<Skeleton, CodecError> {
    let sym = dec.decode_symbol(&mut m.node[depth.min(MAX_DEPTH_CTX)])?;
    let leaf = |kind, strand| Skeleton::Leaf { kind, strand, len };
    Ok(match sym {
        NODE_FULL | NODE_MISMATCHED => {
            let strand = if dec.decode_bit(&mut m.strand)? {
                Strand::Reverse
            } else {
                Strand::Forward
            };
            let kind = if sym == NODE_FULL {
                LeafKind::Full
            } else {
                LeafKind::Mismatched
            };
            leaf(kind, strand)
        }
        NODE_UNMAPPED => leaf(LeafKind::Unmapped, Strand::Forward),
        _ => {
            if len < 2 || depth >= 32 {
                return Err(CodecError::Corrupt("split of an unsplittable segment"));
            }
            let l = decode_node(dec, m, len / 2, depth + 1)?;
            let r = decode_node(dec, m, len - len / 2, depth + 1)?;
            Skeleton::Split(Box::new(l), Box::new(r))
        }
    })
}

/// Rank of `base` among `ACGT` with `expected` removed. `N` (or any base
/// equal to `expected`, which cannot be a mismatch) maps to rank 0.
#[inline]
pub fn misvalue_rank(expected: u8, base: u8) -> usize {
    match base::code_of(base) {
        Some(c) if c < N_CODE && c != expected => {
            if c > expected {
                c as usize - 1
            } else {
                c as usize
            }
        }
        _ => 0,
    }
}

/// Inverse of [`misvalue_rank`] for real bases.
#[inline]
pub fn misvalue_base(expected: u8, rank: usize) -> u8 {
    let code = if rank as u8 >= expected {
        rank as u8 + 1
    } else {
        rank as u8
    };
    ALPHABET[code as usize]
}

/// 3-ary mismatch-base model with one context per expected base.
#[derive(Debug, Clone)]
pub struct MisvalueModel {
    ctx: [SymbolContext; 4],
}

impl Default for MisvalueModel {
    fn default() -> Self {
        MisvalueModel {
            ctx: core::array::from_fn(|_| SymbolContext::new(3)),
        }
    }
}

impl MisvalueModel {
    pub fn encode(&mut self, enc: &mut Encoder, expected: u8, base: u8) {
        enc.encode_symbol(
            &mut self.ctx[expected as usize],
            misvalue_rank(expected, base),
        );
    }

    pub fn decode(&mut self, dec: &mut Decoder<'_>, expected: u8) -> Result<u8, CodecError> {
        let rank = dec.decode_symbol(&mut self.ctx[expected as usize])?;
        Ok(misvalue_base(expected, rank))
    }
}

/// Codes `(expected, read base)` pairs for every mismatch in order.
pub fn encode_misvalues<I>(mismatches: I) -> Vec<u8>
where
    I: IntoIterator<Item = (u8, u8)>,
{
    let mut model = MisvalueModel::default();
    let mut enc = Encoder::new();
    for (expected, b) in mismatches {
        model.encode(&mut enc, expected, b);
    }
    enc.finish()
}

pub fn decode_misvalues(data: &[u8], expected: &[u8]) -> Result<Vec<u8>, CodecError> {
    let mut model = MisvalueModel::default();
    let mut dec = Decoder::new(data)?;
    let out = expected
        .iter()
        .map(|&e| model.decode(&mut dec, e))
        .collect::<Result<Vec<_>, _>>()?;
    dec.finish()?;
    Ok(out)
}

/// Order-2 base model: 16 contexts of 4 symbols.
#[derive(Debug, Clone)]
pub struct BaseModel {
    ctx: Vec<SymbolContext>,
    history: usize,
}

impl Default for BaseModel {
    fn default() -> Self {
        BaseModel {
            ctx: vec![SymbolContext::new(4); 16],
            history: 0,
        }
    }
}

impl BaseModel {
    /// `N` is coded as `A`; the N mask restores it.
    pub fn encode(&mut self, enc: &mut Encoder, base: u8) {
        let code = match base::code_of(base) {
            Some(c) if c < N_CODE => c as usize,
            _ => 0,
        };
        enc.encode_symbol(&mut self.ctx[self.history], code);
        self.history = ((self.history << 2) | code) & 15;
    }

    pub fn decode(&mut self, dec: &mut Decoder<'_>) -> Result<u8, CodecError> {
        let code = dec.decode_symbol(&mut self.ctx[self.history])?;
        self.history = ((self.history << 2) | code) & 15;
        Ok(ALPHABET[code])
    }
}

/// Concatenated bases of all unaligned leaves.
pub fn encode_unmapped<'a, I>(segments: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut model = BaseModel::default();
    let mut enc = Encoder::new();
    for seg in segments {
        for &b in seg {
            model.encode(&mut enc, b);
        }
    }
    enc.finish()
}

pub fn decode_unmapped(data: &[u8], total: usize) -> Result<Vec<u8>, CodecError> {
    let mut model = BaseModel::default();
    let mut dec = Decoder::new(data)?;
    let out = (0..total)
        .map(|_| model.decode(&mut dec))
        .collect::<Result<Vec<_>, _>>()?;
    dec.finish()?;
    Ok(out)
}

struct NMaskModels {
    has_n: [BitContext; 2],
    count: MagnitudeModel,
    gap: MagnitudeModel,
}

impl NMaskModels {
    fn new() -> Self {
        NMaskModels {
            has_n: [BitContext::new(); 2],
            count: MagnitudeModel::default(),
            gap: MagnitudeModel::default(),
        }
    }
}

/// Per read: a has-N flag (context: previous read's flag), then the number
/// of Ns minus one and the gaps between them (first position, then
/// `next - prev - 1`).
pub fn encode_nmask<'a, I>(reads: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut m = NMaskModels::new();
    let mut enc = Encoder::new();
    let mut prev = false;
    for read in reads {
        let ns: Vec<u32> = read
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == b'N')
            .map(|(i, _)| i as u32)
            .collect();
        let has = !ns.is_empty();
        enc.encode_bit(&mut m.has_n[prev as usize], has);
        prev = has;
        if has {
            m.count.encode(&mut enc, ns.len() as u32 - 1);
            let mut next = 0u32;
            for &p in &ns {
                m.gap.encode(&mut enc, p - next);
                next = p + 1;
            }
        }
    }
    enc.finish()
}

/// N positions for each read of the given lengths.
pub fn decode_nmask(data: &[u8], lengths: &[u32]) -> Result<Vec<Vec<u32>>, CodecError> {
    let mut m = NMaskModels::new();
    let mut dec = Decoder::new(data)?;
    let mut prev = false;
    let mut out = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let has = dec.decode_bit(&mut m.has_n[prev as usize])?;
        prev = has;
        let mut ns = Vec::new();
        if has {
            let count = m.count.decode(&mut dec)? as u64 + 1;
            if count > u64::from(len) {
                return Err(CodecError::Corrupt("more Ns than bases"));
            }
            let mut next = 0u64;
            for _ in 0..count {
                let p = next + u64::from(m.gap.decode(&mut dec)?);
                if p >= u64::from(len) {
                    return Err(CodecError::Corrupt("N position beyond read"));
                }
                ns.push(p as u32);
                next = p + 1;
            }
        }
        out.push(ns);
    }
    dec.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::SegmentMatch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leaf_match(len: u32, mism: usize) -> MatchNode {
        MatchNode::Match(SegmentMatch {
            refpos: 0,
            strand: Strand::Forward,
            len,
            mispos: (0..mism as u32).collect(),
            misvalues: vec![b'A'; mism],
        })
    }

    fn entropy(counts: &[u64]) -> f64 {
        let t: u64 = counts.iter().sum();
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| -(c as f64) * (c as f64 / t as f64).log2())
            .sum()
    }

    #[test]
    fn exclusion_ranks() {
        assert_eq!(misvalue_rank(0, b'C'), 0);
        assert_eq!(misvalue_rank(3, b'G'), 2);
        for e in 0..4u8 {
            for (rank, &b) in ALPHABET
                .iter()
                .filter(|&&b| b != ALPHABET[e as usize])
                .enumerate()
            {
                assert_eq!(misvalue_rank(e, b), rank);
                assert_eq!(misvalue_base(e, rank), b);
            }
        }
        assert_eq!(misvalue_rank(2, b'N'), 0);
    }

    #[test]
    fn split_tree_serialization() {
        let tree = MatchNode::Split(
            Box::new(leaf_match(75, 0)),
            Box::new(MatchNode::Split(
                Box::new(leaf_match(38, 2)),
                Box::new(MatchNode::Unmapped(vec![b'A'; 38])),
            )),
        );
        let o = MatchOutcome {
            root: tree,
            read_length: 151,
        };
        let bytes = encode_meta(core::slice::from_ref(&o));
        let sk = decode_meta(&bytes, 1).unwrap();
        assert_eq!(sk[0], Skeleton::from_node(&o.root));
        let leaves = sk[0].leaves();
        assert_eq!(
            leaves,
            [
                (0, LeafKind::Full, Strand::Forward, 75),
                (75, LeafKind::Mismatched, Strand::Forward, 38),
                (113, LeafKind::Unmapped, Strand::Forward, 38),
            ]
        );
    }

    #[test]
    fn full_match_meta_is_small() {
        let outs: Vec<MatchOutcome> = (0..10_000)
            .map(|_| MatchOutcome {
                root: leaf_match(100, 0),
                read_length: 100,
            })
            .collect();
        let bytes = encode_meta(&outs);
        assert!((bytes.len() * 8) < 2 * outs.len(), "{} bytes", bytes.len());
        assert_eq!(decode_meta(&bytes, outs.len()).unwrap().len(), outs.len());
        assert!(encode_meta(&[]).is_empty());
        assert!(decode_meta(&[], 0).unwrap().is_empty());
    }

    #[test]
    fn misvalues_near_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let pairs: Vec<(u8, u8)> = (0..10_000)
            .map(|_| {
                let e = rng.random_range(0..4u8);
                (e, misvalue_base(e, rng.random_range(0..3)))
            })
            .collect();
        let bytes = encode_misvalues(pairs.iter().copied());
        let bound = 10_000.0 * 3f64.log2();
        let size = bytes.len() as f64 * 8.0;
        assert!((size - bound).abs() / bound <= 0.02, "{size} vs {bound}");
        let exp: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let back = decode_misvalues(&bytes, &exp).unwrap();
        assert!(back.iter().zip(&pairs).all(|(&b, p)| b == p.1));
    }

    #[test]
    fn unmapped_round_trip_and_entropy() {
        let bytes = encode_unmapped([b"ACGT".as_slice()]);
        assert_eq!(decode_unmapped(&bytes, 4).unwrap(), b"ACGT");

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let uniform: Vec<u8> = (0..100_000)
            .map(|_| ALPHABET[rng.random_range(0..4)])
            .collect();
        let n = encode_unmapped([uniform.as_slice()]).len() as f64;
        assert!((n - 25_000.0).abs() / 25_000.0 <= 0.02, "{n}");

        let biased: Vec<u8> = (0..100_000)
            .map(|_| {
                if rng.random_bool(0.7) {
                    b'A'
                } else {
                    ALPHABET[rng.random_range(1..4)]
                }
            })
            .collect();
        let mut hist = [0u64; 4];
        for &b in &biased {
            hist[base::code_of(b).unwrap() as usize] += 1;
        }
        let bound = entropy(&hist);
        let bytes = encode_unmapped([biased.as_slice()]);
        let size = bytes.len() as f64 * 8.0;
        assert!((size - bound).abs() / bound <= 0.02, "{size} vs {bound}");
        assert_eq!(decode_unmapped(&bytes, biased.len()).unwrap(), biased);
    }

    #[test]
    fn nmask_cases() {
        let reads: Vec<&[u8]> = vec![b"ACNNT", b"NNNN", b"ACGT", b"N"];
        let bytes = encode_nmask(reads.iter().copied());
        let back = decode_nmask(&bytes, &[5, 4, 4, 1]).unwrap();
        assert_eq!(back, vec![vec![2, 3], vec![0, 1, 2, 3], vec![], vec![0]]);
    }

    #[test]
    fn nmask_without_ns_is_tiny() {
        let read = [b'A'; 100];
        let reads: Vec<&[u8]> = vec![&read; 10_000];
        let bytes = encode_nmask(reads.iter().copied());
        assert!(
            (bytes.len() as f64 * 8.0) < 0.1 * 10_000.0,
            "{}",
            bytes.len()
        );
        assert_eq!(
            decode_nmask(&bytes, &vec![100; 10_000]).unwrap().len(),
            10_000
        );
    }

    #[test]
    fn corrupt_nmask_detected() {
        let bytes = encode_nmask([b"ACNNT".as_slice()]);
        assert!(decode_nmask(&bytes, &[2]).is_err());
    }
}
