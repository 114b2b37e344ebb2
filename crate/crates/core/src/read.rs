//! Reads and read blocks.

use alloc::vec::Vec;

/// One read: uppercase bases over `ACGTN` and its index inside its block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadRecord {
    pub bases: Vec<u8>,
    pub ordinal: u32,
}

impl ReadRecord {
    pub fn new(bases: Vec<u8>, ordinal: u32) -> Self {
        debug_assert!(!bases.is_empty());
        debug_assert!(bases.iter().all(|b| b"ACGTN".contains(b)));
        ReadRecord { bases, ordinal }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// A run of consecutive reads compressed independently of other blocks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReadBlock {
    pub reads: Vec<ReadRecord>,
    /// Total bases in `reads`.
    pub raw_byte_budget: u64,
}

/// Greedy partition: a block closes at the first read that brings its base
/// total to `block_size_bytes` or more. Ordinals are renumbered per block.
pub fn split_blocks<I>(reads: I, block_size_bytes: u64) -> Vec<ReadBlock>
where
    I: IntoIterator<Item = ReadRecord>,
{
    BlockSplitter::new(reads.into_iter(), block_size_bytes).collect()
}

/// Lazy form of [`split_blocks`].
pub struct BlockSplitter<I> {
    reads: I,
    block_size_bytes: u64,
}

impl<I: Iterator<Item = ReadRecord>> BlockSplitter<I> {
    pub fn new(reads: I, block_size_bytes: u64) -> Self {
        BlockSplitter {
            reads,
            block_size_bytes,
        }
    }
}

impl<I: Iterator<Item = ReadRecord>> Iterator for BlockSplitter<I> {
    type Item = ReadBlock;

    fn next(&mut self) -> Option<ReadBlock> {
        let mut current = ReadBlock::default();
        for mut read in self.reads.by_ref() {
            read.ordinal = current.reads.len() as u32;
            current.raw_byte_budget += read.len() as u64;
            current.reads.push(read);
            if current.raw_byte_budget >= self.block_size_bytes {
                break;
            }
        }
        (!current.reads.is_empty()).then_some(current)
    }
}
