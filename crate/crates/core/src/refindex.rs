//! Packed reference sequence and the integer k-mer index used for seeding.

use alloc::vec;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::base::{self, N_CODE};
use crate::error::RefError;

/// Longest supported k-mer; codes must fit in a `u32`.
pub const MAX_K: usize = 16;

/// Reference bases at two bits per base plus a validity bit per position.
///
/// Non-`ACGT` symbols are stored as `A` with the validity bit cleared. Read
/// reconstruction only ever looks at the packed bases, so the digest covers
/// those and the length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefSequence {
    packed: Vec<u8>,
    valid: Vec<u64>,
    len: usize,
    digest: [u8; 32],
}

/// Incremental construction of a [`RefSequence`].
#[derive(Debug, Clone, Default)]
pub struct RefBuilder {
    packed: Vec<u8>,
    valid: Vec<u64>,
    len: usize,
}

impl RefBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends ASCII symbols. Case is ignored; anything outside `ACGT` is
    /// kept as an invalid position.
    pub fn push_bases(&mut self, bases: &[u8]) {
        for &b in bases {
            let code = match b.to_ascii_uppercase() {
                b'A' => Some(0u8),
                b'C' => Some(1),
                b'G' => Some(2),
                b'T' => Some(3),
                _ => None,
            };
            let i = self.len;
            if i.is_multiple_of(4) {
                self.packed.push(0);
            }
            if i.is_multiple_of(64) {
                self.valid.push(0);
            }
            if let Some(c) = code {
                self.packed[i / 4] |= c << ((i % 4) * 2);
                self.valid[i / 64] |= 1 << (i % 64);
            }
            self.len += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn finish(self) -> Result<RefSequence, RefError> {
        if self.len == 0 {
            return Err(RefError::Empty);
        }
        if self.len as u64 > u64::from(u32::MAX) {
            return Err(RefError::TooLong(self.len as u64));
        }
        let mut hasher = Sha256::new();
        hasher.update((self.len as u64).to_le_bytes());
        hasher.update(&self.packed);
        let digest = hasher.finalize().into();
        Ok(RefSequence {
            packed: self.packed,
            valid: self.valid,
            len: self.len,
            digest,
        })
    }
}

impl RefSequence {
    pub fn from_bases(bases: &[u8]) -> Result<Self, RefError> {
        let mut b = RefBuilder::new();
        b.push_bases(bases);
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// 2-bit code at `pos` (invalid positions read as `A`).
    #[inline]
    pub fn base(&self, pos: usize) -> u8 {
        (self.packed[pos / 4] >> ((pos % 4) * 2)) & 3
    }

    #[inline]
    pub fn is_valid(&self, pos: usize) -> bool {
        (self.valid[pos / 64] >> (pos % 64)) & 1 == 1
    }

    /// Codes of `len` bases starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> Vec<u8> {
        (start..start + len).map(|p| self.base(p)).collect()
    }

    /// SHA-256 of the length and packed bases.
    pub fn digest(&self) -> [u8; 32] {
        self.digest
    }

    pub fn packed_bytes(&self) -> &[u8] {
        &self.packed
    }
}

/// Base-4 integer code of a k-mer given as codes (`A=0 .. T=3`). `None` if
/// any symbol is `N`.
#[inline]
pub fn kmer_code(codes: &[u8]) -> Option<u32> {
    debug_assert!(codes.len() <= MAX_K);
    let mut code = 0u32;
    for &c in codes {
        if c >= N_CODE {
            return None;
        }
        code = (code << 2) | u32::from(c);
    }
    Some(code)
}

/// Same as [`kmer_code`] for ASCII bases.
pub fn kmer_code_ascii(bases: &[u8]) -> Option<u32> {
    let codes: Option<Vec<u8>> = bases.iter().map(|&b| base::code_of(b)).collect();
    kmer_code(&codes?)
}

/// Inverse of [`kmer_code`].
pub fn decode_kmer(code: u32, k: usize) -> Vec<u8> {
    (0..k)
        .map(|i| ((code >> (2 * (k - 1 - i))) & 3) as u8)
        .collect()
}

/// Map from k-mer code to the earliest `max_hits_per_kmer` reference
/// positions where that k-mer occurs on fully valid bases.
///
/// Stored as sorted distinct codes with CSR offsets into one position array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmerIndex {
    k: usize,
    max_hits_per_kmer: usize,
    codes: Vec<u32>,
    offsets: Vec<u32>,
    positions: Vec<u32>,
}

impl KmerIndex {
    /// # Panics
    ///
    /// If `k` is zero or above [`MAX_K`], or `max_hits_per_kmer` is zero.
    pub fn build(reference: &RefSequence, k: usize, max_hits_per_kmer: usize) -> Self {
        assert!((1..=MAX_K).contains(&k), "k = {k} out of range");
        assert!(max_hits_per_kmer > 0);
        let mask: u64 = if k == 16 {
            u32::MAX as u64
        } else {
            (1u64 << (2 * k)) - 1
        };
        let mut pairs: Vec<u64> = Vec::with_capacity(reference.len().saturating_sub(k - 1));
        let mut code = 0u64;
        let mut run = 0usize;
        for pos in 0..reference.len() {
            if reference.is_valid(pos) {
                code = ((code << 2) | u64::from(reference.base(pos))) & mask;
                run += 1;
            } else {
                run = 0;
            }
            if run >= k {
                let start = pos + 1 - k;
                pairs.push((code << 32) | start as u64);
            }
        }
        pairs.sort_unstable();

        let mut codes = Vec::new();
        let mut offsets = vec![0u32];
        let mut positions = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let c = (pairs[i] >> 32) as u32;
            let mut j = i;
            while j < pairs.len() && (pairs[j] >> 32) as u32 == c {
                j += 1;
            }
            codes.push(c);
            positions.extend(
                pairs[i..j]
                    .iter()
                    .take(max_hits_per_kmer)
                    .map(|&p| p as u32),
            );
            offsets.push(positions.len() as u32);
            i = j;
        }
        KmerIndex {
            k,
            max_hits_per_kmer,
            codes,
            offsets,
            positions,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_hits_per_kmer(&self) -> usize {
        self.max_hits_per_kmer
    }

    /// Ascending positions for `code`; empty if absent.
    pub fn lookup(&self, code: u32) -> &[u32] {
        match self.codes.binary_search(&code) {
            Ok(i) => &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            Err(_) => &[],
        }
    }

    /// Number of distinct k-mers present.
    pub fn distinct_kmers(&self) -> usize {
        self.codes.len()
    }

    /// Iterates `(code, positions)` in ascending code order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, &[u32])> + '_ {
        self.codes.iter().enumerate().map(move |(i, &c)| {
            (
                c,
                &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            )
        })
    }

    /// Raw arrays `(codes, offsets, positions)` for serialization.
    pub fn parts(&self) -> (&[u32], &[u32], &[u32]) {
        (&self.codes, &self.offsets, &self.positions)
    }

    /// Rebuilds an index from [`parts`](Self::parts). Returns `None` when the
    /// arrays are not a well-formed index.
    pub fn from_parts(
        k: usize,
        max_hits_per_kmer: usize,
        codes: Vec<u32>,
        offsets: Vec<u32>,
        positions: Vec<u32>,
    ) -> Option<Self> {
        if !(1..=MAX_K).contains(&k) || max_hits_per_kmer == 0 {
            return None;
        }
        if offsets.len() != codes.len() + 1 || offsets.first() != Some(&0) {
            return None;
        }
        if *offsets.last()? as usize != positions.len() {
            return None;
        }
        if codes.windows(2).any(|w| w[0] >= w[1]) || offsets.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        if k < 16 && codes.last().is_some_and(|&c| c >> (2 * k) != 0) {
            return None;
        }
        for w in offsets.windows(2) {
            let list = &positions[w[0] as usize..w[1] as usize];
            if list.len() > max_hits_per_kmer || list.windows(2).any(|p| p[0] >= p[1]) {
                return None;
            }
        }
        Some(KmerIndex {
            k,
            max_hits_per_kmer,
            codes,
            offsets,
            positions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_index(r: &[u8], k: usize, cap: usize) -> BTreeMap<u32, Vec<u32>> {
        let mut m: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        if r.len() < k {
            return m;
        }
        for p in 0..=r.len() - k {
            if let Some(c) = kmer_code_ascii(&r[p..p + k]) {
                if r[p..p + k].contains(&b'N') {
                    continue;
                }
                let e = m.entry(c).or_default();
                if e.len() < cap {
                    e.push(p as u32);
                }
            }
        }
        m
    }

    fn as_map(idx: &KmerIndex) -> BTreeMap<u32, Vec<u32>> {
        idx.entries().map(|(c, p)| (c, p.to_vec())).collect()
    }

    #[test]
    fn load_simple() {
        let r = RefSequence::from_bases(b"ACGT").unwrap();
        assert_eq!(r.len(), 4);
        assert!((0..4).all(|i| r.is_valid(i)));
        assert_eq!(r.window(0, 4), [0, 1, 2, 3]);
        let r = RefSequence::from_bases(b"ACNGT").unwrap();
        assert_eq!(r.len(), 5);
        assert!(!r.is_valid(2));
        assert_eq!((0..5).filter(|&i| r.is_valid(i)).count(), 4,);
        assert_eq!(RefSequence::from_bases(b""), Err(RefError::Empty));
    }

    #[test]
    fn lowercase_is_normalized() {
        let a = RefSequence::from_bases(b"acgtn").unwrap();
        let b = RefSequence::from_bases(b"ACGTN").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(
            a.digest(),
            RefSequence::from_bases(b"ACGTT").unwrap().digest()
        );
    }

    #[test]
    fn kmer_code_examples() {
        assert_eq!(kmer_code_ascii(b"AAAAAAAAAA"), Some(0));
        assert_eq!(kmer_code_ascii(b"AAAAAAAAAT"), Some(3));
        assert_eq!(kmer_code_ascii(b"TTTTTTTTTT"), Some(1_048_575));
        assert_eq!(kmer_code_ascii(b"AAAAANAAAA"), None);
    }

    #[test]
    fn kmer_code_bijective_small_k() {
        for k in 1..=6 {
            for code in 0..(1u32 << (2 * k)) {
                let bases = decode_kmer(code, k);
                assert_eq!(kmer_code(&bases), Some(code));
            }
        }
    }

    #[test]
    fn kmer_code_random_k10() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let codes: Vec<u8> = (0..10).map(|_| rng.random_range(0..4)).collect();
            let c = kmer_code(&codes).unwrap();
            assert!(c < 1 << 20);
            assert_eq!(decode_kmer(c, 10), codes);
        }
    }

    #[test]
    fn index_examples() {
        let r = RefSequence::from_bases(b"ACGTACGTACGTA").unwrap();
        let idx = KmerIndex::build(&r, 10, 16);
        assert_eq!(idx.distinct_kmers(), 4);
        assert!(idx.entries().all(|(_, p)| p.len() == 1));
        assert_eq!(as_map(&idx), brute_index(b"ACGTACGTACGTA", 10, 16));

        let r = RefSequence::from_bases(&[b'A'; 12]).unwrap();
        let idx = KmerIndex::build(&r, 10, 8);
        assert_eq!(idx.distinct_kmers(), 1);
        assert_eq!(idx.lookup(0), [0, 1, 2]);
        assert!(idx.lookup(5).is_empty());

        let r = RefSequence::from_bases(b"ACGTACG").unwrap();
        assert_eq!(KmerIndex::build(&r, 10, 16).distinct_kmers(), 0);
    }

    #[test]
    fn index_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..20 {
            let len = rng.random_range(1..10_000);
            let bases: Vec<u8> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.01) {
                        b'N'
                    } else {
                        b"ACGT"[rng.random_range(0..4)]
                    }
                })
                .collect();
            let k = [4, 6, 8, 10][trial % 4];
            let cap = [1, 3, 16][trial % 3];
            let r = RefSequence::from_bases(&bases).unwrap();
            let idx = KmerIndex::build(&r, k, cap);
            assert_eq!(as_map(&idx), brute_index(&bases, k, cap));
            for (code, ps) in idx.entries() {
                for &p in ps {
                    assert_eq!(r.window(p as usize, k), decode_kmer(code, k));
                    assert!((p as usize..p as usize + k).all(|i| r.is_valid(i)));
                }
            }
            let (c, o, p) = idx.parts();
            let back = KmerIndex::from_parts(k, cap, c.to_vec(), o.to_vec(), p.to_vec()).unwrap();
            assert_eq!(back, idx);
        }
    }

    #[test]
    fn from_parts_rejects_garbage() {
        assert!(KmerIndex::from_parts(10, 16, vec![3, 1], vec![0, 1, 2], vec![0, 1]).is_none());
        assert!(KmerIndex::from_parts(10, 16, vec![1], vec![0, 2], vec![5, 4]).is_none());
        assert!(KmerIndex::from_parts(10, 1, vec![1], vec![0, 2], vec![4, 5]).is_none());
        assert!(KmerIndex::from_parts(10, 16, vec![1], vec![0, 1], vec![4]).is_some());
    }
}
