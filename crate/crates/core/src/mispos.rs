//! Mismatch position vectors.
//!
//! Each aligned segment with at least one mismatch contributes its binary
//! vector `x_1..x_L`. Bit `x_i` is coded in one of 11 binary contexts chosen
//! by `x_{i-10} + ... + x_{i-1}`, with zeros before the start of the vector.
//! The window restarts at every vector.
//!
//! [`MisposModel::Order0`] and [`MisposModel::PositionIndex`] are baseline
//! models kept for size comparisons.

use alloc::vec;
use alloc::vec::Vec;

use crate::coder::{BitContext, Decoder, Encoder};
use crate::error::CodecError;

/// Bits of history summed for the context.
pub const WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MisposModel {
    /// Context = mismatches among the previous 10 positions.
    #[default]
    WindowSum,
    /// One context for every bit.
    Order0,
    /// Context = position within the vector.
    PositionIndex,
}

/// Sliding popcount over the last [`WINDOW`] bits.
#[derive(Debug, Clone, Default)]
pub struct WindowSum {
    history: u16,
    sum: u8,
}

impl WindowSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Context for the next bit, in `0..=10`.
    #[inline]
    pub fn context(&self) -> usize {
        self.sum as usize
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let leaving = (self.history >> (WINDOW - 1)) & 1;
        self.sum = self.sum - leaving as u8 + bit as u8;
        self.history = ((self.history << 1) | bit as u16) & ((1 << WINDOW) - 1);
    }
}

struct Contexts {
    model: MisposModel,
    table: Vec<BitContext>,
}

impl Contexts {
    fn new(model: MisposModel) -> Self {
        let n = match model {
            MisposModel::WindowSum => WINDOW + 1,
            MisposModel::Order0 => 1,
            MisposModel::PositionIndex => 0,
        };
        Contexts {
            model,
            table: vec![BitContext::new(); n],
        }
    }

    #[inline]
    fn get(&mut self, i: usize, window: &WindowSum) -> &mut BitContext {
        let idx = match self.model {
            MisposModel::WindowSum => window.context(),
            MisposModel::Order0 => 0,
            MisposModel::PositionIndex => {
                if self.table.len() <= i {
                    self.table.resize(i + 1, BitContext::new());
                }
                i
            }
        };
        &mut self.table[idx]
    }
}

/// Codes dense vectors with the default model.
pub fn encode_mispos<'a, I>(vectors: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a [bool]>,
{
    encode_mispos_with(vectors, MisposModel::WindowSum)
}

pub fn encode_mispos_with<'a, I>(vectors: I, model: MisposModel) -> Vec<u8>
where
    I: IntoIterator<Item = &'a [bool]>,
{
    let mut ctx = Contexts::new(model);
    let mut enc = Encoder::new();
    for v in vectors {
        let mut w = WindowSum::new();
        for (i, &bit) in v.iter().enumerate() {
            enc.encode_bit(ctx.get(i, &w), bit);
            w.push(bit);
        }
    }
    enc.finish()
}

/// Codes sparse vectors given as `(len, ascending mismatch offsets)`.
pub fn encode_mispos_sparse<'a, I>(vectors: I) -> Vec<u8>
where
    I: IntoIterator<Item = (u32, &'a [u32])>,
{
    let mut ctx = Contexts::new(MisposModel::WindowSum);
    let mut enc = Encoder::new();
    for (len, offs) in vectors {
        let mut w = WindowSum::new();
        let mut next = offs.iter().peekable();
        for i in 0..len {
            let bit = next.next_if_eq(&&i).is_some();
            enc.encode_bit(ctx.get(i as usize, &w), bit);
            w.push(bit);
        }
        debug_assert!(next.peek().is_none());
    }
    enc.finish()
}

pub fn decode_mispos(data: &[u8], lengths: &[usize]) -> Result<Vec<Vec<bool>>, CodecError> {
    decode_mispos_with(data, lengths, MisposModel::WindowSum)
}

pub fn decode_mispos_with(
    data: &[u8],
    lengths: &[usize],
    model: MisposModel,
) -> Result<Vec<Vec<bool>>, CodecError> {
    let mut ctx = Contexts::new(model);
    let mut dec = Decoder::new(data)?;
    let mut out = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut w = WindowSum::new();
        let mut v = Vec::with_capacity(len);
        for i in 0..len {
            let bit = dec.decode_bit(ctx.get(i, &w))?;
            w.push(bit);
            v.push(bit);
        }
        out.push(v);
    }
    dec.finish()?;
    Ok(out)
}

/// Decodes into sparse offsets, the inverse of [`encode_mispos_sparse`].
pub fn decode_mispos_sparse(data: &[u8], lengths: &[u32]) -> Result<Vec<Vec<u32>>, CodecError> {
    let mut ctx = Contexts::new(MisposModel::WindowSum);
    let mut dec = Decoder::new(data)?;
    let mut out = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut w = WindowSum::new();
        let mut offs = Vec::new();
        for i in 0..len {
            let bit = dec.decode_bit(ctx.get(i as usize, &w))?;
            w.push(bit);
            if bit {
                offs.push(i);
            }
        }
        out.push(offs);
    }
    dec.finish()?;
    Ok(out)
}
