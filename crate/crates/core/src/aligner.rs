//! Seed-and-extend alignment with recursive split matching.
//!
//! A segment is seeded with `num_seeds` k-mers at evenly spaced offsets, on
//! the forward read and on its reverse complement. Every index hit gives a
//! candidate start; the candidate is compared base by base (substitutions
//! only) and accepted if its mismatch count is within the threshold for the
//! segment length. Among accepted candidates the one with the fewest
//! mismatches wins, then the smallest reference position, then the forward
//! strand.
//!
//! When a whole read fails, it is cut into `floor(n/2)` and `ceil(n/2)` halves
//! and each half is aligned again, recursively, as long as the left half
//! would still be at least `min_len` long.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::base::{self, complement, N_CODE};
use crate::read::ReadBlock;
use crate::refindex::{kmer_code, KmerIndex, RefSequence, MAX_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strand {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigError(pub &'static str);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid aligner configuration: {}", self.0)
    }
}

/// Parts per million in one.
pub const PPM: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignerConfig {
    pub k: usize,
    pub num_seeds: usize,
    /// Allowed mismatches per base, in parts per million. The threshold for
    /// a segment of length `L` is `ceil(L * mismatch_ppm / 10^6)`.
    pub mismatch_ppm: u32,
    /// Segments are split only while `floor(n/2) >= min_len`. `usize::MAX`
    /// disables splitting.
    pub min_len: usize,
    pub max_candidates_per_seed: usize,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        AlignerConfig {
            k: 10,
            num_seeds: 4,
            mismatch_ppm: 100_000,
            min_len: 25,
            max_candidates_per_seed: 16,
        }
    }
}

impl AlignerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=MAX_K).contains(&self.k) {
            return Err(ConfigError("k must be in 1..=16"));
        }
        if self.min_len < self.k {
            return Err(ConfigError("min_len must be at least k"));
        }
        if self.num_seeds == 0 {
            return Err(ConfigError("at least one seed is required"));
        }
        if self.max_candidates_per_seed == 0 {
            return Err(ConfigError("max_candidates_per_seed must be positive"));
        }
        if self.mismatch_ppm > PPM {
            return Err(ConfigError("mismatch rate must be within [0, 1]"));
        }
        Ok(())
    }

    /// Maximum mismatches accepted for a segment of `len` bases.
    #[inline]
    pub fn threshold(&self, len: usize) -> usize {
        let num = len as u64 * u64::from(self.mismatch_ppm);
        num.div_ceil(u64::from(PPM)) as usize
    }

    #[inline]
    pub fn split_permitted(&self, len: usize) -> bool {
        len / 2 >= self.min_len
    }

    /// Seed offsets for a segment of `len >= k` bases: `i * (len - k) / (s - 1)`
    /// for `i` in `0..s`, deduplicated.
    pub fn seed_offsets(&self, len: usize) -> Vec<usize> {
        debug_assert!(len >= self.k);
        let span = len - self.k;
        let mut out: Vec<usize> = if self.num_seeds == 1 {
            alloc::vec![0]
        } else {
            (0..self.num_seeds)
                .map(|i| i * span / (self.num_seeds - 1))
                .collect()
        };
        out.dedup();
        out
    }
}

/// A segment aligned to the reference with substitutions only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMatch {
    /// Forward coordinate of the leftmost reference base covered.
    pub refpos: u32,
    pub strand: Strand,
    pub len: u32,
    /// Mismatching offsets in read order, ascending.
    pub mispos: Vec<u32>,
    /// Read bases (ASCII) at `mispos`, same order.
    pub misvalues: Vec<u8>,
}

/// The base a read position is expected to carry under an alignment.
#[inline]
pub fn expected_base(
    reference: &RefSequence,
    refpos: u32,
    strand: Strand,
    len: u32,
    offset: u32,
) -> u8 {
    match strand {
        Strand::Forward => reference.base((refpos + offset) as usize),
        Strand::Reverse => complement(reference.base((refpos + len - 1 - offset) as usize)),
    }
}

impl SegmentMatch {
    pub fn mismatches(&self) -> usize {
        self.mispos.len()
    }

    /// Dense mismatch vector `x_1..x_L`.
    pub fn mispos_vector(&self) -> Vec<bool> {
        let mut v = alloc::vec![false; self.len as usize];
        for &p in &self.mispos {
            v[p as usize] = true;
        }
        v
    }

    /// Rebuilds the segment's bases from the reference and the mismatches.
    pub fn reconstruct(&self, reference: &RefSequence) -> Vec<u8> {
        let mut out: Vec<u8> = (0..self.len)
            .map(|i| {
                base::ascii_of(expected_base(
                    reference,
                    self.refpos,
                    self.strand,
                    self.len,
                    i,
                ))
            })
            .collect();
        for (&p, &v) in self.mispos.iter().zip(&self.misvalues) {
            out[p as usize] = v;
        }
        out
    }
}

/// One node of a read's match tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchNode {
    Match(SegmentMatch),
    /// ASCII bases of a segment that could not be aligned.
    Unmapped(Vec<u8>),
    /// Alignment failed; children cover `floor(n/2)` and `ceil(n/2)` bases.
    Split(Box<MatchNode>, Box<MatchNode>),
}

/// How a read as a whole was matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchType {
    Full,
    Mismatched,
    Split,
    Unmapped,
}

impl MatchNode {
    pub fn len(&self) -> usize {
        match self {
            MatchNode::Match(m) => m.len as usize,
            MatchNode::Unmapped(b) => b.len(),
            MatchNode::Split(l, r) => l.len() + r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> MatchType {
        match self {
            MatchNode::Match(m) if m.mispos.is_empty() => MatchType::Full,
            MatchNode::Match(_) => MatchType::Mismatched,
            MatchNode::Split(..) => MatchType::Split,
            MatchNode::Unmapped(_) => MatchType::Unmapped,
        }
    }

    /// Calls `f(offset_in_read, leaf)` for every leaf, left to right.
    pub fn for_each_leaf<'a, F: FnMut(usize, &'a MatchNode)>(&'a self, f: &mut F) {
        self.walk(0, f);
    }

    fn walk<'a, F: FnMut(usize, &'a MatchNode)>(&'a self, offset: usize, f: &mut F) {
        match self {
            MatchNode::Split(l, r) => {
                l.walk(offset, f);
                r.walk(offset + l.len(), f);
            }
            leaf => f(offset, leaf),
        }
    }
}

/// Alignment result for one read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    pub root: MatchNode,
    pub read_length: usize,
}

impl MatchOutcome {
    pub fn match_type(&self) -> MatchType {
        self.root.kind()
    }

    /// Leaves with their offsets in the read, left to right.
    pub fn leaves(&self) -> Vec<(usize, &MatchNode)> {
        let mut out = Vec::new();
        self.root
            .for_each_leaf(&mut |off, leaf| out.push((off, leaf)));
        out
    }

    /// Bases covered by aligned leaves.
    pub fn matched_bases(&self) -> usize {
        let mut n = 0;
        self.root.for_each_leaf(&mut |_, leaf| {
            if let MatchNode::Match(m) = leaf {
                n += m.len as usize;
            }
        });
        n
    }

    /// Replays the leaves against the reference.
    pub fn reconstruct(&self, reference: &RefSequence) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.read_length);
        self.root.for_each_leaf(&mut |_, leaf| match leaf {
            MatchNode::Match(m) => out.extend(m.reconstruct(reference)),
            MatchNode::Unmapped(b) => out.extend_from_slice(b),
            MatchNode::Split(..) => unreachable!(),
        });
        out
    }
}

/// Aligner bound to one reference and its index.
#[derive(Debug, Clone, Copy)]
pub struct Aligner<'a> {
    index: &'a KmerIndex,
    reference: &'a RefSequence,
    config: AlignerConfig,
}

impl<'a> Aligner<'a> {
    /// # Panics
    ///
    /// If the index was built with a different k than `config.k`.
    pub fn new(index: &'a KmerIndex, reference: &'a RefSequence, config: AlignerConfig) -> Self {
        assert_eq!(index.k(), config.k, "index k differs from aligner k");
        Aligner {
            index,
            reference,
            config,
        }
    }

    pub fn config(&self) -> &AlignerConfig {
        &self.config
    }

    /// Aligns one segment of ASCII bases. `None` when no examined candidate
    /// is within the mismatch threshold.
    pub fn align_segment(&self, bases: &[u8]) -> Option<SegmentMatch> {
        let codes: Vec<u8> = bases
            .iter()
            .map(|&b| base::code_of(b).unwrap_or(N_CODE))
            .collect();
        self.align_codes(&codes, bases)
    }

    fn align_codes(&self, codes: &[u8], bases: &[u8]) -> Option<SegmentMatch> {
        let len = codes.len();
        let k = self.config.k;
        if len < k || len > self.reference.len() {
            return None;
        }
        let threshold = self.config.threshold(len);
        let offsets = self.config.seed_offsets(len);
        let reverse = base::reverse_complement(codes);
        let mut seen: Vec<(u32, Strand)> = Vec::new();
        // (mismatches, refpos, strand)
        let mut best: Option<(usize, u32, Strand)> = None;

        for (strand, oriented) in [(Strand::Forward, codes), (Strand::Reverse, &reverse[..])] {
            for &off in &offsets {
                let Some(code) = kmer_code(&oriented[off..off + k]) else {
                    continue;
                };
                let hits = self.index.lookup(code);
                for &hit in hits.iter().take(self.config.max_candidates_per_seed) {
                    let hit = hit as usize;
                    if hit < off || hit - off + len > self.reference.len() {
                        continue;
                    }
                    let start = (hit - off) as u32;
                    if seen.contains(&(start, strand)) {
                        continue;
                    }
                    seen.push((start, strand));
                    let limit = best.map_or(threshold, |(m, _, _)| m.min(threshold));
                    if let Some(m) = self.count_mismatches(oriented, start as usize, limit) {
                        let cand = (m, start, strand);
                        if best.is_none_or(|b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }

        let (_, refpos, strand) = best?;
        let len32 = len as u32;
        let mispos: Vec<u32> = (0..len32)
            .filter(|&i| {
                codes[i as usize] != expected_base(self.reference, refpos, strand, len32, i)
            })
            .collect();
        let misvalues = mispos.iter().map(|&i| bases[i as usize]).collect();
        Some(SegmentMatch {
            refpos,
            strand,
            len: len32,
            mispos,
            misvalues,
        })
    }

    /// Mismatches of `oriented` against the reference at `start`, or `None`
    /// once more than `limit` are seen.
    #[inline]
    fn count_mismatches(&self, oriented: &[u8], start: usize, limit: usize) -> Option<usize> {
        let mut m = 0;
        for (i, &c) in oriented.iter().enumerate() {
            if c != self.reference.base(start + i) {
                m += 1;
                if m > limit {
                    return None;
                }
            }
        }
        Some(m)
    }

    /// Aligns a read, splitting failed segments recursively.
    pub fn align_read(&self, bases: &[u8]) -> MatchOutcome {
        let codes: Vec<u8> = bases
            .iter()
            .map(|&b| base::code_of(b).unwrap_or(N_CODE))
            .collect();
        MatchOutcome {
            root: self.split_align(&codes, bases),
            read_length: bases.len(),
        }
    }

    fn split_align(&self, codes: &[u8], bases: &[u8]) -> MatchNode {
        if let Some(m) = self.align_codes(codes, bases) {
            return MatchNode::Match(m);
        }
        let n = bases.len();
        if !self.config.split_permitted(n) {
            return MatchNode::Unmapped(bases.to_vec());
        }
        let mid = n / 2;
        MatchNode::Split(
            Box::new(self.split_align(&codes[..mid], &bases[..mid])),
            Box::new(self.split_align(&codes[mid..], &bases[mid..])),
        )
    }

    /// One outcome per read, in block order.
    pub fn align_block(&self, block: &ReadBlock) -> Vec<MatchOutcome> {
        block
            .reads
            .iter()
            .map(|r| self.align_read(&r.bases))
            .collect()
    }
}
