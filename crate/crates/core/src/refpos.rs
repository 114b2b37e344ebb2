//! Reference position codec.
//!
//! Positions go through three stages:
//!
//! 1. Consecutive duplicates are removed; a `PosEqual` bit per position marks
//!    whether it equals its predecessor (coded with the previous bit as
//!    context).
//! 2. The remaining sequence `p` is differenced against the median of its
//!    three predecessors, `d(x) = p(x) - mid{p(x-1), p(x-2), p(x-3)}`, with
//!    zeros before the start.
//! 3. Each `d` is coded as an MSB symbol (33-ary, zero included), a sign bit
//!    for nonzero values and the rest bits in `(msb, plane)` contexts.
//!
//! The four parts go to four independent coders.

use alloc::vec::Vec;

use crate::bitplane::{BitPlaneForm, RestContexts, MSB_ALPHABET, MSB_ZERO};
use crate::coder::{BitContext, Decoder, Encoder, SymbolContext};
use crate::error::CodecError;

/// Encoded refpos substreams of one block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefposStreams {
    pub pos_equal: Vec<u8>,
    pub sign: Vec<u8>,
    pub msb: Vec<u8>,
    pub rest: Vec<u8>,
}

impl RefposStreams {
    pub fn total_len(&self) -> usize {
        self.pos_equal.len() + self.sign.len() + self.msb.len() + self.rest.len()
    }
}

/// Splits positions into equality flags and the deduplicated sequence.
pub fn dedup(positions: &[u32]) -> (Vec<bool>, Vec<u32>) {
    let mut flags = Vec::with_capacity(positions.len());
    let mut unique = Vec::new();
    let mut prev = None;
    for &p in positions {
        let eq = prev == Some(p);
        flags.push(eq);
        if !eq {
            unique.push(p);
        }
        prev = Some(p);
    }
    (flags, unique)
}

#[inline]
pub fn median3(a: u32, b: u32, c: u32) -> u32 {
    a.max(b).min(a.min(b).max(c))
}

/// Median-filtered differences of a deduplicated sequence.
pub fn median_delta(unique: &[u32]) -> Vec<i64> {
    let mut hist = [0u32; 3];
    unique
        .iter()
        .map(|&p| {
            let d = i64::from(p) - i64::from(median3(hist[0], hist[1], hist[2]));
            hist = [p, hist[0], hist[1]];
            d
        })
        .collect()
}

/// Inverse of [`median_delta`]. Fails if a value leaves the 32-bit range.
pub fn median_undelta(deltas: &[i64]) -> Result<Vec<u32>, CodecError> {
    let mut hist = [0u32; 3];
    deltas
        .iter()
        .map(|&d| {
            let p = i64::from(median3(hist[0], hist[1], hist[2])) + d;
            let p = u32::try_from(p).map_err(|_| CodecError::Corrupt("refpos out of range"))?;
            hist = [p, hist[0], hist[1]];
            Ok(p)
        })
        .collect()
}

/// Plain 4-bytes-per-position encoding, the size baseline for the codec.
pub fn encode_fixed_width(positions: &[u32]) -> Vec<u8> {
    positions.iter().flat_map(|p| p.to_le_bytes()).collect()
}

struct Models {
    pos_equal: [BitContext; 2],
    sign: BitContext,
    msb: SymbolContext,
    rest: RestContexts,
}

impl Models {
    fn new() -> Self {
        Models {
            pos_equal: [BitContext::new(); 2],
            sign: BitContext::new(),
            msb: SymbolContext::new(MSB_ALPHABET),
            rest: RestContexts::default(),
        }
    }
}

pub fn encode_refpos(positions: &[u32]) -> RefposStreams {
    let (flags, unique) = dedup(positions);
    let mut m = Models::new();

    let mut eq = Encoder::new();
    let mut prev = false;
    for &f in &flags {
        eq.encode_bit(&mut m.pos_equal[prev as usize], f);
        prev = f;
    }

    let mut sign = Encoder::new();
    let mut msb = Encoder::new();
    let mut rest = Encoder::new();
    for d in median_delta(&unique) {
        let form = BitPlaneForm::split(d);
        msb.encode_symbol(&mut m.msb, form.msb_symbol());
        if let BitPlaneForm::NonZero {
            negative,
            msb: top,
            rest: bits,
        } = form
        {
            sign.encode_bit(&mut m.sign, negative);
            m.rest.encode(&mut rest, top, bits);
        }
    }

    RefposStreams {
        pos_equal: eq.finish(),
        sign: sign.finish(),
        msb: msb.finish(),
        rest: rest.finish(),
    }
}

/// Decodes `count` positions.
pub fn decode_refpos(streams: &RefposStreams, count: usize) -> Result<Vec<u32>, CodecError> {
    let mut m = Models::new();

    let mut eq = Decoder::new(&streams.pos_equal)?;
    let mut flags = Vec::with_capacity(count);
    let mut prev = false;
    for i in 0..count {
        let f = eq.decode_bit(&mut m.pos_equal[prev as usize])?;
        if i == 0 && f {
            return Err(CodecError::Corrupt("first refpos marked as duplicate"));
        }
        flags.push(f);
        prev = f;
    }
    eq.finish()?;

    let unique_count = flags.iter().filter(|&&f| !f).count();
    let mut sign = Decoder::new(&streams.sign)?;
    let mut msb = Decoder::new(&streams.msb)?;
    let mut rest = Decoder::new(&streams.rest)?;
    let mut deltas = Vec::with_capacity(unique_count);
    for _ in 0..unique_count {
        let sym = msb.decode_symbol(&mut m.msb)?;
        let form = if sym == MSB_ZERO {
            BitPlaneForm::Zero
        } else {
            let negative = sign.decode_bit(&mut m.sign)?;
            let top = (sym - 1) as u8;
            let bits = m.rest.decode(&mut rest, top)?;
            BitPlaneForm::NonZero {
                negative,
                msb: top,
                rest: bits,
            }
        };
        deltas.push(form.join());
    }
    sign.finish()?;
    msb.finish()?;
    rest.finish()?;

    let unique = median_undelta(&deltas)?;
    let mut out = Vec::with_capacity(count);
    let mut it = unique.into_iter();
    for f in flags {
        if f {
            let last = *out
                .last()
                .ok_or(CodecError::Corrupt("duplicate without predecessor"))?;
            out.push(last);
        } else {
            out.push(it.next().ok_or(CodecError::Corrupt("refpos count"))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Median by sorting, evaluated straight from the formula.
    fn oracle_delta(p: &[u32]) -> Vec<i64> {
        let at = |x: isize| if x < 0 { 0i64 } else { p[x as usize] as i64 };
        (0..p.len() as isize)
            .map(|x| {
                let mut w = [at(x - 1), at(x - 2), at(x - 3)];
                w.sort();
                at(x) - w[1]
            })
            .collect()
    }

    #[test]
    fn dedup_examples() {
        assert_eq!(dedup(&[7, 7, 7]), (vec![false, true, true], vec![7]));
        assert_eq!(
            dedup(&[5, 9, 9, 5]),
            (vec![false, false, true, false], vec![5, 9, 5])
        );
        assert_eq!(dedup(&[]), (vec![], vec![]));
    }

    #[test]
    fn median_delta_examples() {
        assert_eq!(median_delta(&[100, 105, 110, 108]), [100, 105, 10, 3]);
        assert_eq!(median_delta(&[42]), [42]);
        assert_eq!(
            median_delta(&[10, 20, 30, 40, 50]),
            oracle_delta(&[10, 20, 30, 40, 50])
        );
        assert_eq!(median_delta(&[10, 20, 30, 40, 50]), [10, 20, 20, 20, 20]);
        assert_eq!(
            median_undelta(&[100, 105, 10, 3]).unwrap(),
            [100, 105, 110, 108]
        );
    }

    #[test]
    fn median_delta_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let n = rng.random_range(0..50);
            let p: Vec<u32> = (0..n).map(|_| rng.random()).collect();
            let d = median_delta(&p);
            assert_eq!(d, oracle_delta(&p));
            assert_eq!(median_undelta(&d).unwrap(), p);
        }
    }

    #[test]
    fn median3_all_orders() {
        for (a, b, c) in [
            (1, 2, 3),
            (1, 3, 2),
            (2, 1, 3),
            (2, 3, 1),
            (3, 1, 2),
            (3, 2, 1),
        ] {
            assert_eq!(median3(a, b, c), 2);
        }
        assert_eq!(median3(5, 5, 1), 5);
    }

    #[test]
    fn undelta_rejects_overflow() {
        assert!(median_undelta(&[-1]).is_err());
        assert!(median_undelta(&[1 << 32]).is_err());
    }

    #[test]
    fn round_trip_examples() {
        for p in [
            vec![100, 105, 110, 108],
            vec![],
            vec![u32::MAX, 0, u32::MAX, u32::MAX, 1],
            vec![0, 0, 0],
        ] {
            let s = encode_refpos(&p);
            assert_eq!(decode_refpos(&s, p.len()).unwrap(), p);
        }
    }

    #[test]
    fn identical_positions_are_tiny() {
        let p = vec![9u32; 10_000];
        let s = encode_refpos(&p);
        assert!(s.total_len() < 200, "{}", s.total_len());
        assert_eq!(decode_refpos(&s, p.len()).unwrap(), p);
    }

    #[test]
    fn linear_beats_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut x = 1000u32;
        let linear: Vec<u32> = (0..10_000)
            .map(|_| {
                x += rng.random_range(0..20);
                x
            })
            .collect();
        let uniform: Vec<u32> = (0..10_000).map(|_| rng.random()).collect();
        let a = encode_refpos(&linear).total_len();
        let b = encode_refpos(&uniform).total_len();
        assert!(a < b / 2, "{a} vs {b}");
        assert_eq!(encode_fixed_width(&uniform).len(), 40_000);
    }

    #[test]
    fn truncated_stream_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p: Vec<u32> = (0..500).map(|_| rng.random()).collect();
        let mut s = encode_refpos(&p);
        s.rest.truncate(s.rest.len() / 2);
        assert!(decode_refpos(&s, p.len()).is_err());
    }
}
