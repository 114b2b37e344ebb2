//! Archive layout. All integers little-endian; byte-exact description in
//! `docs/FORMAT.md`.
//!
//! ```text
//! fixed header   magic "AMGC", version u16, flags u16, k u8, min_len u32,
//!                mismatch_ppm u32, ref_length u64, digest [32], block_count u32,
//!                total_reads u64
//! block table    block_count x { read_count u32, 10 x (offset u64, length u64),
//!                checksum u64 }
//! header crc     u64 over every preceding byte
//! payload        streams of block 0 in table order, then block 1, ...
//! ```

use std::io::Write;

use amgc_core::{StreamKind, StreamSet};
use crc::{Crc, CRC_64_XZ};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"AMGC";
pub const VERSION: u16 = 1;

/// Reads have differing lengths.
pub const FLAG_VARIABLE_LENGTH: u16 = 1 << 0;
/// Lowercase input bases were uppercased.
pub const FLAG_CASE_NORMALIZED: u16 = 1 << 1;
/// Blocks carry a raw identifier/quality sidecar.
pub const FLAG_PASSTHROUGH: u16 = 1 << 2;
const KNOWN_FLAGS: u16 = FLAG_VARIABLE_LENGTH | FLAG_CASE_NORMALIZED | FLAG_PASSTHROUGH;

/// Nine coded streams plus the pass-through sidecar.
pub const SLOTS_PER_BLOCK: usize = 10;
pub const SIDECAR_SLOT: usize = 9;

pub const FIXED_HEADER_LEN: usize = 4 + 2 + 2 + 1 + 4 + 4 + 8 + 32 + 4 + 8;
pub const TABLE_ENTRY_LEN: usize = 4 + SLOTS_PER_BLOCK * 16 + 8;

/// `min_len` value recorded when splitting is disabled.
pub const NO_SPLIT: u32 = u32::MAX;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

pub fn crc64(data: &[u8]) -> u64 {
    CRC64.checksum(data)
}

/// Archive-wide parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveInfo {
    pub flags: u16,
    pub k: u8,
    pub min_len: u32,
    pub mismatch_ppm: u32,
    pub ref_length: u64,
    pub digest: [u8; 32],
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockPayload {
    pub read_count: u32,
    pub streams: StreamSet,
    pub sidecar: Vec<u8>,
}

impl BlockPayload {
    fn slot(&self, i: usize) -> &[u8] {
        if i == SIDECAR_SLOT {
            &self.sidecar
        } else {
            self.streams.get(StreamKind::ALL[i])
        }
    }

    fn checksum(&self) -> u64 {
        let mut d = CRC64.digest();
        for i in 0..SLOTS_PER_BLOCK {
            d.update(self.slot(i));
        }
        d.finalize()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEntry {
    pub read_count: u32,
    /// `(absolute offset, length)` per slot.
    pub slots: [(u64, u64); SLOTS_PER_BLOCK],
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveHeader {
    pub version: u16,
    pub info: ArchiveInfo,
    pub total_reads: u64,
    pub blocks: Vec<BlockEntry>,
}

impl ArchiveHeader {
    pub fn header_len(&self) -> usize {
        FIXED_HEADER_LEN + self.blocks.len() * TABLE_ENTRY_LEN + 8
    }

    /// Bytes per slot summed over all blocks.
    pub fn slot_totals(&self) -> [u64; SLOTS_PER_BLOCK] {
        let mut t = [0u64; SLOTS_PER_BLOCK];
        for b in &self.blocks {
            for (acc, s) in t.iter_mut().zip(&b.slots) {
                *acc += s.1;
            }
        }
        t
    }
}

/// Serializes a complete archive. Output depends only on the arguments.
pub fn archive_bytes(info: &ArchiveInfo, blocks: &[BlockPayload]) -> Vec<u8> {
    let header_len = FIXED_HEADER_LEN + blocks.len() * TABLE_ENTRY_LEN + 8;
    let payload_len: usize = blocks
        .iter()
        .map(|b| (0..SLOTS_PER_BLOCK).map(|i| b.slot(i).len()).sum::<usize>())
        .sum();
    let mut out = Vec::with_capacity(header_len + payload_len);

    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&info.flags.to_le_bytes());
    out.push(info.k);
    out.extend_from_slice(&info.min_len.to_le_bytes());
    out.extend_from_slice(&info.mismatch_ppm.to_le_bytes());
    out.extend_from_slice(&info.ref_length.to_le_bytes());
    out.extend_from_slice(&info.digest);
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    let total_reads: u64 = blocks.iter().map(|b| u64::from(b.read_count)).sum();
    out.extend_from_slice(&total_reads.to_le_bytes());

    let mut offset = header_len as u64;
    for b in blocks {
        out.extend_from_slice(&b.read_count.to_le_bytes());
        for i in 0..SLOTS_PER_BLOCK {
            let len = b.slot(i).len() as u64;
            out.extend_from_slice(&offset.to_le_bytes());
            out.extend_from_slice(&len.to_le_bytes());
            offset += len;
        }
        out.extend_from_slice(&b.checksum().to_le_bytes());
    }
    let crc = crc64(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    debug_assert_eq!(out.len(), header_len);

    for b in blocks {
        for i in 0..SLOTS_PER_BLOCK {
            out.extend_from_slice(b.slot(i));
        }
    }
    out
}

/// Writes a complete archive, returning its size in bytes.
pub fn write_archive<W: Write>(
    info: &ArchiveInfo,
    blocks: &[BlockPayload],
    sink: &mut W,
) -> std::io::Result<u64> {
    let bytes = archive_bytes(info, blocks);
    sink.write_all(&bytes)?;
    Ok(bytes.len() as u64)
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.data.get(self.at..end).ok_or(Error::Truncated)?;
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses and validates the header and block table.
///
/// Checks run in a fixed order: magic, version, truncation, header
/// checksum, reference digest, table consistency.
pub fn read_header(data: &[u8], expected_digest: Option<&[u8; 32]>) -> Result<ArchiveHeader> {
    let n = data.len().min(MAGIC.len());
    if data[..n] != MAGIC[..n] {
        return Err(Error::BadMagic);
    }
    let mut c = Cursor { data, at: 0 };
    c.take(4)?;
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let flags = c.u16()?;
    let k = c.u8()?;
    let min_len = c.u32()?;
    let mismatch_ppm = c.u32()?;
    let ref_length = c.u64()?;
    let digest: [u8; 32] = c.take(32)?.try_into().unwrap();
    let block_count = c.u32()? as usize;
    let total_reads = c.u64()?;

    let table_len = block_count
        .checked_mul(TABLE_ENTRY_LEN)
        .and_then(|t| t.checked_add(8))
        .ok_or(Error::Truncated)?;
    if data.len() - FIXED_HEADER_LEN < table_len {
        return Err(Error::Truncated);
    }
    let crc_at = FIXED_HEADER_LEN + block_count * TABLE_ENTRY_LEN;
    let stored = u64::from_le_bytes(data[crc_at..crc_at + 8].try_into().unwrap());
    if crc64(&data[..crc_at]) != stored {
        return Err(Error::HeaderChecksum);
    }
    if let Some(d) = expected_digest {
        if *d != digest {
            return Err(Error::DigestMismatch);
        }
    }
    if flags & !KNOWN_FLAGS != 0 {
        return Err(Error::Corrupt(format!("unknown flag bits 0x{flags:04x}")));
    }

    let mut blocks = Vec::with_capacity(block_count);
    let mut expect = (crc_at + 8) as u64;
    let mut reads = 0u64;
    for b in 0..block_count {
        let read_count = c.u32()?;
        let mut slots = [(0u64, 0u64); SLOTS_PER_BLOCK];
        for s in &mut slots {
            *s = (c.u64()?, c.u64()?);
            if s.0 != expect {
                return Err(Error::Corrupt(format!(
                    "block {b}: stream offset out of place"
                )));
            }
            expect = expect
                .checked_add(s.1)
                .ok_or_else(|| Error::Corrupt(format!("block {b}: stream length overflow")))?;
        }
        let checksum = c.u64()?;
        reads += u64::from(read_count);
        blocks.push(BlockEntry {
            read_count,
            slots,
            checksum,
        });
    }
    if reads != total_reads {
        return Err(Error::Corrupt("read counts disagree with total".into()));
    }
    if (data.len() as u64) < expect {
        return Err(Error::Truncated);
    }
    if (data.len() as u64) > expect {
        return Err(Error::Corrupt("trailing bytes after payload".into()));
    }
    Ok(ArchiveHeader {
        version,
        info: ArchiveInfo {
            flags,
            k,
            min_len,
            mismatch_ppm,
            ref_length,
            digest,
        },
        total_reads,
        blocks,
    })
}

/// Extracts and verifies block `index` of a validated archive.
pub fn read_block(data: &[u8], header: &ArchiveHeader, index: usize) -> Result<BlockPayload> {
    let entry = &header.blocks[index];
    let slice = |(off, len): (u64, u64)| &data[off as usize..(off + len) as usize];
    let mut streams = StreamSet::default();
    for (i, kind) in StreamKind::ALL.iter().enumerate() {
        streams.set(*kind, slice(entry.slots[i]).to_vec());
    }
    let block = BlockPayload {
        read_count: entry.read_count,
        streams,
        sidecar: slice(entry.slots[SIDECAR_SLOT]).to_vec(),
    };
    if block.checksum() != entry.checksum {
        return Err(Error::BlockChecksum(index));
    }
    Ok(block)
}

/// Parses a whole archive, verifying every checksum.
pub fn read_archive(
    data: &[u8],
    expected_digest: Option<&[u8; 32]>,
) -> Result<(ArchiveHeader, Vec<BlockPayload>)> {
    let header = read_header(data, expected_digest)?;
    let blocks = (0..header.blocks.len())
        .map(|i| read_block(data, &header, i))
        .collect::<Result<_>>()?;
    Ok((header, blocks))
}
