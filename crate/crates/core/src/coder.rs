//! Adaptive range coder.
//!
//! 32-bit range, 64-bit low with carry propagation through a cached byte and
//! a run of pending `0xFF` bytes, byte-wise renormalization when the range
//! drops below 2^24. Models are frequency counts with add-one smoothing that
//! are halved once their total reaches [`RESCALE_BOUND`].
//!
//! An encoder that never saw a symbol produces an empty payload. Otherwise
//! the payload is exactly `renormalizations + 4` bytes, and a decoder that
//! replays the same symbol/context history consumes every byte.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CodecError;

/// Counter total at which a context halves its counts.
pub const RESCALE_BOUND: u32 = 1 << 13;

const TOP: u32 = 1 << 24;

/// Adaptive binary context: `p(1) = (n1 + 1) / (n0 + n1 + 2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitContext {
    n0: u16,
    n1: u16,
}

impl BitContext {
    pub const fn new() -> Self {
        BitContext { n0: 0, n1: 0 }
    }

    pub fn counts(&self) -> (u16, u16) {
        (self.n0, self.n1)
    }

    /// Current estimate of `p(1)`.
    pub fn p1(&self) -> f64 {
        (self.n1 as f64 + 1.0) / (self.n0 as f64 + self.n1 as f64 + 2.0)
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.n1 += 1;
        } else {
            self.n0 += 1;
        }
        if u32::from(self.n0) + u32::from(self.n1) >= RESCALE_BOUND {
            self.n0 /= 2;
            self.n1 /= 2;
        }
    }
}

/// Adaptive context over an `m`-symbol alphabet, add-one smoothed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolContext {
    counts: Vec<u16>,
    sum: u32,
}

impl SymbolContext {
    /// # Panics
    ///
    /// If `alphabet_size` is zero or larger than 4096.
    pub fn new(alphabet_size: usize) -> Self {
        assert!(
            (1..=4096).contains(&alphabet_size),
            "alphabet size {alphabet_size} out of range"
        );
        SymbolContext {
            counts: vec![0; alphabet_size],
            sum: 0,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    fn total(&self) -> u32 {
        self.sum + self.counts.len() as u32
    }

    /// Cumulative frequency below `symbol` and the symbol's own frequency.
    #[inline]
    fn interval(&self, symbol: usize) -> (u32, u32) {
        let cum = self.counts[..symbol]
            .iter()
            .map(|&c| u32::from(c) + 1)
            .sum();
        (cum, u32::from(self.counts[symbol]) + 1)
    }

    #[inline]
    fn update(&mut self, symbol: usize) {
        self.counts[symbol] += 1;
        self.sum += 1;
        if self.sum >= RESCALE_BOUND {
            self.sum = 0;
            for c in &mut self.counts {
                *c /= 2;
                self.sum += u32::from(*c);
            }
        }
    }
}

/// Range encoder writing into an owned buffer.
#[derive(Debug, Clone)]
pub struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    out: Vec<u8>,
    // The very first byte leaving the carry chain is always zero; it is dropped.
    first: bool,
    used: bool,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Encoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            out: Vec::new(),
            first: true,
            used: false,
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                let b = byte.wrapping_add(carry);
                if self.first {
                    debug_assert_eq!(b, 0);
                    self.first = false;
                } else {
                    self.out.push(b);
                }
                byte = 0xFF;
                self.pending -= 1;
                if self.pending == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    fn encode_interval(&mut self, cum: u32, freq: u32, total: u32, last: bool) {
        self.used = true;
        let r = self.range / total;
        self.low += u64::from(r * cum);
        // The last symbol absorbs the rounding remainder of the range.
        self.range = if last { self.range - r * cum } else { r * freq };
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    #[inline]
    pub fn encode_bit(&mut self, ctx: &mut BitContext, bit: bool) {
        let f0 = u32::from(ctx.n0) + 1;
        let total = f0 + u32::from(ctx.n1) + 1;
        if bit {
            self.encode_interval(f0, total - f0, total, true);
        } else {
            self.encode_interval(0, f0, total, false);
        }
        ctx.update(bit);
    }

    /// # Panics
    ///
    /// If `symbol` is outside the context's alphabet.
    #[inline]
    pub fn encode_symbol(&mut self, ctx: &mut SymbolContext, symbol: usize) {
        assert!(
            symbol < ctx.alphabet_size(),
            "symbol {symbol} out of alphabet"
        );
        let m = ctx.alphabet_size();
        if m > 1 {
            let (cum, freq) = ctx.interval(symbol);
            self.encode_interval(cum, freq, ctx.total(), symbol + 1 == m);
        }
        ctx.update(symbol);
    }

    /// Bytes the payload would have if finished now (approximate, for stats).
    pub fn len_hint(&self) -> usize {
        self.out.len() + self.pending as usize + 4
    }

    pub fn finish(mut self) -> Vec<u8> {
        if !self.used {
            return Vec::new();
        }
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

/// Range decoder over a borrowed payload.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
    empty: bool,
}

impl<'a> Decoder<'a> {
    /// An empty payload is accepted; decoding anything from it other than a
    /// one-symbol alphabet is reported as truncation.
    pub fn new(data: &'a [u8]) -> Result<Self, CodecError> {
        let mut dec = Decoder {
            data,
            pos: 0,
            range: u32::MAX,
            code: 0,
            empty: data.is_empty(),
        };
        if !dec.empty {
            for _ in 0..4 {
                dec.code = (dec.code << 8) | u32::from(dec.next_byte()?);
            }
        }
        Ok(dec)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8, CodecError> {
        let b = *self.data.get(self.pos).ok_or(CodecError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    #[inline]
    fn normalize(&mut self) -> Result<(), CodecError> {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next_byte()?);
        }
        Ok(())
    }

    #[inline]
    pub fn decode_bit(&mut self, ctx: &mut BitContext) -> Result<bool, CodecError> {
        if self.empty {
            return Err(CodecError::Truncated);
        }
        let f0 = u32::from(ctx.n0) + 1;
        let total = f0 + u32::from(ctx.n1) + 1;
        let r = self.range / total;
        let bound = r * f0;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        self.normalize()?;
        ctx.update(bit);
        Ok(bit)
    }

    #[inline]
    pub fn decode_symbol(&mut self, ctx: &mut SymbolContext) -> Result<usize, CodecError> {
        let m = ctx.alphabet_size();
        if m == 1 {
            ctx.update(0);
            return Ok(0);
        }
        if self.empty {
            return Err(CodecError::Truncated);
        }
        let total = ctx.total();
        let r = self.range / total;
        let target = (self.code / r).min(total - 1);
        let mut cum = 0u32;
        let mut symbol = 0usize;
        loop {
            let f = u32::from(ctx.counts[symbol]) + 1;
            if symbol + 1 == m || target < cum + f {
                break;
            }
            cum += f;
            symbol += 1;
        }
        self.code -= r * cum;
        self.range = if symbol + 1 == m {
            self.range - r * cum
        } else {
            r * (u32::from(ctx.counts[symbol]) + 1)
        };
        self.normalize()?;
        ctx.update(symbol);
        Ok(symbol)
    }

    /// Number of payload bytes consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// Checks that the whole payload was consumed.
    pub fn finish(self) -> Result<(), CodecError> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(CodecError::Corrupt("trailing bytes after coded symbols"))
        }
    }
}
