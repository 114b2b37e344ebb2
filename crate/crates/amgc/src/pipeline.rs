//! End-to-end compression and decompression.
//!
//! Input is parsed on the calling thread and cut into blocks; batches of
//! blocks are aligned and encoded on a rayon pool and collected back in
//! block order, so the archive does not depend on the thread count.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::time::{Duration, Instant};

use amgc_core::aligner::{Aligner, MatchType};
use amgc_core::block::{decode_block, encode_block};
use amgc_core::{
    AlignerConfig, BlockSplitter, KmerIndex, MatchOutcome, ReadBlock, ReadRecord, RefSequence,
};
use rayon::prelude::*;

use crate::container::{
    self, ArchiveHeader, ArchiveInfo, BlockPayload, FLAG_CASE_NORMALIZED, FLAG_PASSTHROUGH,
    FLAG_VARIABLE_LENGTH, NO_SPLIT, SLOTS_PER_BLOCK,
};
use crate::error::{Error, Result};
use crate::fastq::{self, Annotation, FastqReader};

pub const DEFAULT_BLOCK_SIZE: u64 = 250 * 1024 * 1024;
pub const DEFAULT_MAX_HITS: usize = 16;

#[derive(Debug, Clone)]
pub struct CompressOptions {
    pub aligner: AlignerConfig,
    pub max_hits_per_kmer: usize,
    pub block_size: u64,
    /// Worker threads; 0 means one per logical core.
    pub threads: usize,
    /// Store identifier and quality lines raw next to the coded reads.
    pub passthrough: bool,
}

impl Default for CompressOptions {
    fn default() -> Self {
        CompressOptions {
            aligner: AlignerConfig::default(),
            max_hits_per_kmer: DEFAULT_MAX_HITS,
            block_size: DEFAULT_BLOCK_SIZE,
            threads: 0,
            passthrough: false,
        }
    }
}

impl CompressOptions {
    pub fn validate(&self) -> Result<()> {
        self.aligner.validate()?;
        if self.max_hits_per_kmer == 0 {
            return Err(Error::InvalidParameter(
                "max hits per k-mer must be positive".into(),
            ));
        }
        if self.block_size == 0 {
            return Err(Error::InvalidParameter(
                "block size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Counts of read-level match types.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchTally {
    pub full: u64,
    pub mismatched: u64,
    pub split: u64,
    pub unmapped: u64,
    pub matched_bases: u64,
    pub total_bases: u64,
}

impl MatchTally {
    pub fn add(&mut self, o: &MatchOutcome) {
        match o.match_type() {
            MatchType::Full => self.full += 1,
            MatchType::Mismatched => self.mismatched += 1,
            MatchType::Split => self.split += 1,
            MatchType::Unmapped => self.unmapped += 1,
        }
        self.matched_bases += o.matched_bases() as u64;
        self.total_bases += o.read_length as u64;
    }

    fn merge(&mut self, o: &MatchTally) {
        self.full += o.full;
        self.mismatched += o.mismatched;
        self.split += o.split;
        self.unmapped += o.unmapped;
        self.matched_bases += o.matched_bases;
        self.total_bases += o.total_bases;
    }

    /// Fraction of read bases covered by aligned leaves.
    pub fn mapped_fraction(&self) -> f64 {
        if self.total_bases == 0 {
            0.0
        } else {
            self.matched_bases as f64 / self.total_bases as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompressReport {
    pub reads: u64,
    pub blocks: usize,
    /// Reads stream size: each read's bases plus a newline.
    pub original_bytes: u64,
    pub archive_bytes: u64,
    /// Per-slot byte totals in container order (nine streams, then sidecar).
    pub stream_bytes: [u64; SLOTS_PER_BLOCK],
    pub tally: MatchTally,
    pub wall_time: Duration,
    /// Peak resident set size in bytes, where the platform reports it.
    pub peak_memory: Option<u64>,
}

impl CompressReport {
    /// `original_bytes / archive_bytes`.
    pub fn ratio(&self) -> f64 {
        self.original_bytes as f64 / self.archive_bytes as f64
    }
}

pub fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Block workers: inline on the caller for one thread, else a private pool.
/// Running inline also keeps single-threaded calls safe from inside another
/// rayon pool.
pub enum Workers {
    Inline,
    Pool(rayon::ThreadPool),
}

impl Workers {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 1 {
            Ok(Workers::Inline)
        } else {
            build_pool(threads).map(Workers::Pool)
        }
    }

    pub fn count(&self) -> usize {
        match self {
            Workers::Inline => 1,
            Workers::Pool(p) => p.current_num_threads(),
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        match self {
            Workers::Inline => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            Workers::Pool(p) => {
                p.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
            }
        }
    }
}

fn encode_sidecar(anns: &[Annotation]) -> Vec<u8> {
    let mut out = Vec::new();
    for a in anns {
        for line in [&a.id, &a.plus, &a.qual] {
            out.extend_from_slice(line);
            out.push(b'\n');
        }
    }
    out
}

fn decode_sidecar(data: &[u8], read_count: usize, block: usize) -> Result<Vec<Annotation>> {
    let bad = || Error::Corrupt(format!("block {block}: malformed pass-through sidecar"));
    let body = data.strip_suffix(b"\n").ok_or_else(bad)?;
    let lines: Vec<&[u8]> = body.split(|&b| b == b'\n').collect();
    if lines.len() != 3 * read_count {
        return Err(bad());
    }
    Ok(lines
        .chunks_exact(3)
        .map(|c| Annotation {
            id: c[0].to_vec(),
            plus: c[1].to_vec(),
            qual: c[2].to_vec(),
        })
        .collect())
}

/// Compresses parsed FASTQ records into archive bytes.
pub fn compress_records<I>(
    records: I,
    reference: &RefSequence,
    index: &KmerIndex,
    opts: &CompressOptions,
) -> Result<(Vec<u8>, CompressReport)>
where
    I: IntoIterator<Item = Result<fastq::FastqRecord>>,
{
    compress_with_flags(records, reference, index, opts, || 0)
}

/// Compresses FASTQ text. Lowercase input sets the case-normalized flag.
pub fn compress_fastq<R: BufRead>(
    input: R,
    reference: &RefSequence,
    index: &KmerIndex,
    opts: &CompressOptions,
) -> Result<(Vec<u8>, CompressReport)> {
    let reader = RefCell::new(FastqReader::new(input, opts.passthrough));
    let records = std::iter::from_fn(|| reader.borrow_mut().next());
    compress_with_flags(records, reference, index, opts, || {
        if reader.borrow().saw_lowercase() {
            FLAG_CASE_NORMALIZED
        } else {
            0
        }
    })
}

fn compress_with_flags<I, F>(
    records: I,
    reference: &RefSequence,
    index: &KmerIndex,
    opts: &CompressOptions,
    input_flags: F,
) -> Result<(Vec<u8>, CompressReport)>
where
    I: IntoIterator<Item = Result<fastq::FastqRecord>>,
    F: FnOnce() -> u16,
{
    let started = Instant::now();
    opts.validate()?;
    if index.k() != opts.aligner.k {
        return Err(Error::InvalidParameter(
            "index k differs from aligner k".into(),
        ));
    }
    let workers = Workers::new(opts.threads)?;
    let batch = workers.count().max(1) * 2;
    let aligner = Aligner::new(index, reference, opts.aligner);

    let mut parse_error = None;
    let annotations: RefCell<VecDeque<Annotation>> = RefCell::new(VecDeque::new());
    let mut lengths: Option<(usize, usize)> = None;
    let mut reads = 0u64;
    let mut original_bytes = 0u64;
    let source = records.into_iter().map_while(|r| match r {
        Ok(rec) => {
            reads += 1;
            let n = rec.bases.len();
            original_bytes += n as u64 + 1;
            lengths = Some(lengths.map_or((n, n), |(lo, hi)| (lo.min(n), hi.max(n))));
            if let Some(a) = rec.annotation {
                annotations.borrow_mut().push_back(a);
            }
            Some(ReadRecord::new(rec.bases, 0))
        }
        Err(e) => {
            parse_error = Some(e);
            None
        }
    });
    let mut splitter = BlockSplitter::new(source, opts.block_size);

    let mut payloads: Vec<BlockPayload> = Vec::new();
    let mut tally = MatchTally::default();
    loop {
        let jobs: Vec<ReadBlock> = splitter.by_ref().take(batch).collect();
        if jobs.is_empty() {
            break;
        }
        let results: Vec<(BlockPayload, MatchTally)> = workers.map(&jobs, |_, block| {
            let outcomes = aligner.align_block(block);
            let mut t = MatchTally::default();
            outcomes.iter().for_each(|o| t.add(o));
            let payload = BlockPayload {
                read_count: block.reads.len() as u32,
                streams: encode_block(&outcomes, reference),
                sidecar: Vec::new(),
            };
            (payload, t)
        });
        for (mut payload, t) in results {
            if opts.passthrough {
                let n = payload.read_count as usize;
                let anns: Vec<Annotation> = annotations.borrow_mut().drain(..n).collect();
                payload.sidecar = encode_sidecar(&anns);
            }
            tally.merge(&t);
            payloads.push(payload);
        }
    }
    drop(splitter);
    if let Some(e) = parse_error {
        return Err(e);
    }

    let mut flags = input_flags();
    if lengths.is_some_and(|(lo, hi)| lo != hi) {
        flags |= FLAG_VARIABLE_LENGTH;
    }
    if opts.passthrough {
        flags |= FLAG_PASSTHROUGH;
    }
    let info = ArchiveInfo {
        flags,
        k: opts.aligner.k as u8,
        min_len: u32::try_from(opts.aligner.min_len).unwrap_or(NO_SPLIT),
        mismatch_ppm: opts.aligner.mismatch_ppm,
        ref_length: reference.len() as u64,
        digest: reference.digest(),
    };
    let bytes = container::archive_bytes(&info, &payloads);
    let mut stream_bytes = [0u64; SLOTS_PER_BLOCK];
    for p in &payloads {
        for (i, (_, s)) in p.streams.iter().enumerate() {
            stream_bytes[i] += s.len() as u64;
        }
        stream_bytes[container::SIDECAR_SLOT] += p.sidecar.len() as u64;
    }
    let report = CompressReport {
        reads,
        blocks: payloads.len(),
        original_bytes,
        archive_bytes: bytes.len() as u64,
        stream_bytes,
        tally,
        wall_time: started.elapsed(),
        peak_memory: peak_memory_bytes(),
    };
    Ok((bytes, report))
}

/// Compresses bases-only reads (convenience for tests and tools).
pub fn compress_reads(
    reads: &[Vec<u8>],
    reference: &RefSequence,
    index: &KmerIndex,
    opts: &CompressOptions,
) -> Result<(Vec<u8>, CompressReport)> {
    let records = reads.iter().map(|b| {
        Ok(fastq::FastqRecord {
            bases: b.clone(),
            annotation: None,
        })
    });
    compress_records(records, reference, index, opts)
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub header: ArchiveHeader,
    pub reads: Vec<Vec<u8>>,
    /// Present when the archive carries a pass-through sidecar.
    pub annotations: Option<Vec<Annotation>>,
}

impl Decoded {
    /// Writes bases-only lines, or full FASTQ records when annotations
    /// are present.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        match &self.annotations {
            Some(anns) => {
                for (r, a) in self.reads.iter().zip(anns) {
                    fastq::write_record(out, r, a)?;
                }
            }
            None => {
                for r in &self.reads {
                    fastq::write_bases_line(out, r)?;
                }
            }
        }
        Ok(())
    }
}

/// Decodes archive bytes against `reference`.
pub fn decompress_bytes(data: &[u8], reference: &RefSequence, threads: usize) -> Result<Decoded> {
    let header = container::read_header(data, Some(&reference.digest()))?;
    if header.info.ref_length != reference.len() as u64 {
        return Err(Error::DigestMismatch);
    }
    let passthrough = header.info.flags & FLAG_PASSTHROUGH != 0;
    let workers = Workers::new(threads)?;
    type BlockOut = (Vec<Vec<u8>>, Option<Vec<Annotation>>);
    let indices: Vec<usize> = (0..header.blocks.len()).collect();
    let blocks: Vec<Result<BlockOut>> = workers.map(&indices, |_, &i| {
        let payload = container::read_block(data, &header, i)?;
        let reads = decode_block(&payload.streams, payload.read_count as usize, reference)
            .map_err(|source| Error::Codec { block: i, source })?;
        let anns = if passthrough {
            let anns = decode_sidecar(&payload.sidecar, reads.len(), i)?;
            if anns
                .iter()
                .zip(&reads)
                .any(|(a, r)| a.qual.len() != r.len())
            {
                return Err(Error::Corrupt(format!(
                    "block {i}: sidecar quality length differs from read length"
                )));
            }
            Some(anns)
        } else if !payload.sidecar.is_empty() {
            return Err(Error::Corrupt(format!("block {i}: unexpected sidecar")));
        } else {
            None
        };
        Ok((reads, anns))
    });
    let mut reads = Vec::with_capacity(header.total_reads as usize);
    let mut annotations = passthrough.then(Vec::new);
    for b in blocks {
        let (r, a) = b?;
        reads.extend(r);
        if let (Some(all), Some(a)) = (annotations.as_mut(), a) {
            all.extend(a);
        }
    }
    Ok(Decoded {
        header,
        reads,
        annotations,
    })
}

/// Peak resident set size (`VmHWM`) of this process.
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{self, SimConfig};

    fn setup() -> (Vec<u8>, RefSequence, KmerIndex) {
        let bases = simgen::random_reference(20_000, 11);
        let r = RefSequence::from_bases(&bases).unwrap();
        let idx = KmerIndex::build(&r, 10, 16);
        (bases, r, idx)
    }

    #[test]
    fn reads_round_trip_across_blocks() {
        let (bases, r, idx) = setup();
        let cfg = SimConfig {
            count: 500,
            read_len_min: 30,
            read_len_max: 180,
            revcomp_fraction: 0.3,
            n_rate: 0.005,
            burst_fraction: 0.1,
            random_fraction: 0.05,
            ..SimConfig::default()
        };
        let reads: Vec<Vec<u8>> = simgen::generate(&bases, &cfg, 5)
            .unwrap()
            .into_iter()
            .map(|s| s.bases)
            .collect();
        let opts = CompressOptions {
            block_size: 5_000,
            threads: 3,
            ..CompressOptions::default()
        };
        let (bytes, report) = compress_reads(&reads, &r, &idx, &opts).unwrap();
        assert!(report.blocks > 5);
        assert_eq!(report.reads, 500);
        assert_eq!(report.archive_bytes, bytes.len() as u64);
        let expected_original: u64 = reads.iter().map(|r| r.len() as u64 + 1).sum();
        assert_eq!(report.original_bytes, expected_original);
        let d = decompress_bytes(&bytes, &r, 2).unwrap();
        assert_eq!(d.reads, reads);
        assert!(d.annotations.is_none());
        assert_ne!(d.header.info.flags & FLAG_VARIABLE_LENGTH, 0);
    }

    #[test]
    fn passthrough_restores_fastq() {
        let (_, r, idx) = setup();
        let input = b"@a x\nacgtacgtacgtacgtacgt\n+a\nIIIIIIIIIIIIIIIIIIII\n@b\nNNNN\n+\n!!!!\n";
        let opts = CompressOptions {
            passthrough: true,
            block_size: 10,
            ..CompressOptions::default()
        };
        let (bytes, _) = compress_fastq(&input[..], &r, &idx, &opts).unwrap();
        let d = decompress_bytes(&bytes, &r, 1).unwrap();
        let flags = d.header.info.flags;
        assert_ne!(flags & FLAG_PASSTHROUGH, 0);
        assert_ne!(flags & FLAG_CASE_NORMALIZED, 0);
        let mut out = Vec::new();
        d.write_to(&mut out).unwrap();
        let expected: &[u8] =
            b"@a x\nACGTACGTACGTACGTACGT\n+a\nIIIIIIIIIIIIIIIIIIII\n@b\nNNNN\n+\n!!!!\n";
        assert_eq!(out, expected);
    }

    #[test]
    fn parse_error_propagates() {
        let (_, r, idx) = setup();
        let err = compress_fastq(
            &b"@a\nACGT\n+\nII\n"[..],
            &r,
            &idx,
            &CompressOptions::default(),
        );
        assert!(matches!(err, Err(Error::Fastq { record: 0, .. })));
    }

    #[test]
    fn wrong_reference_rejected() {
        let (_, r, idx) = setup();
        let (bytes, _) =
            compress_reads(&[b"ACGT".to_vec()], &r, &idx, &CompressOptions::default()).unwrap();
        let other = RefSequence::from_bases(b"ACGTACGTACGTAAAA").unwrap();
        assert!(matches!(
            decompress_bytes(&bytes, &other, 1),
            Err(Error::DigestMismatch)
        ));
    }
}
