//! On-disk k-mer index cache.
//!
//! Blob layout (little-endian): magic `AMGI`, version u16, k u8, cap u32,
//! reference digest [32], code count u64, position count u64, codes,
//! offsets (count + 1), positions, then a CRC-64 of everything before it.
//! A blob whose digest, k, or cap differ from the request is stale.

use std::path::Path;

use amgc_core::{KmerIndex, RefSequence};

use crate::container::crc64;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: [u8; 4] = *b"AMGI";
pub const CACHE_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    /// Loaded from a valid cache file.
    Hit,
    /// No file existed; built and written.
    Created,
    /// File was stale or damaged; rebuilt and overwritten.
    Rebuilt,
}

pub fn serialize(index: &KmerIndex, digest: &[u8; 32]) -> Vec<u8> {
    let (codes, offsets, positions) = index.parts();
    let mut out = Vec::with_capacity(64 + 4 * (codes.len() + offsets.len() + positions.len()));
    out.extend_from_slice(&CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.push(index.k() as u8);
    out.extend_from_slice(&(index.max_hits_per_kmer() as u32).to_le_bytes());
    out.extend_from_slice(digest);
    out.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    out.extend_from_slice(&(positions.len() as u64).to_le_bytes());
    for v in codes.iter().chain(offsets).chain(positions) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc64(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses a blob; `None` if it is damaged or does not match the request.
pub fn deserialize(blob: &[u8], digest: &[u8; 32], k: usize, cap: usize) -> Option<KmerIndex> {
    const FIXED: usize = 4 + 2 + 1 + 4 + 32 + 8 + 8;
    if blob.len() < FIXED + 8 {
        return None;
    }
    let (body, crc) = blob.split_at(blob.len() - 8);
    if crc64(body) != u64::from_le_bytes(crc.try_into().ok()?) {
        return None;
    }
    if body[..4] != CACHE_MAGIC || u16::from_le_bytes([body[4], body[5]]) != CACHE_VERSION {
        return None;
    }
    if usize::from(body[6]) != k
        || u32::from_le_bytes(body[7..11].try_into().ok()?) as usize != cap
        || body[11..43] != digest[..]
    {
        return None;
    }
    let n_codes = u64::from_le_bytes(body[43..51].try_into().ok()?) as usize;
    let n_pos = u64::from_le_bytes(body[51..59].try_into().ok()?) as usize;
    let words = n_codes.checked_mul(2)?.checked_add(1)?.checked_add(n_pos)?;
    if body.len() - FIXED != words.checked_mul(4)? {
        return None;
    }
    let mut vals = body[FIXED..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()));
    let codes: Vec<u32> = vals.by_ref().take(n_codes).collect();
    let offsets: Vec<u32> = vals.by_ref().take(n_codes + 1).collect();
    let positions: Vec<u32> = vals.collect();
    KmerIndex::from_parts(k, cap, codes, offsets, positions)
}

/// Loads the index from `path` if valid, otherwise builds it and writes
/// the cache file.
pub fn load_or_build(
    path: &Path,
    reference: &RefSequence,
    k: usize,
    cap: usize,
) -> Result<(KmerIndex, CacheStatus)> {
    let digest = reference.digest();
    let status = match std::fs::read(path) {
        Ok(blob) => match deserialize(&blob, &digest, k, cap) {
            Some(index) => return Ok((index, CacheStatus::Hit)),
            None => CacheStatus::Rebuilt,
        },
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => CacheStatus::Created,
        Err(e) => return Err(Error::IndexCache(format!("{}: {e}", path.display()))),
    };
    let index = KmerIndex::build(reference, k, cap);
    std::fs::write(path, serialize(&index, &digest))
        .map_err(|e| Error::IndexCache(format!("{}: {e}", path.display())))?;
    Ok((index, status))
}
