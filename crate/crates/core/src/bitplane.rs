//! Sign / MSB / rest-bit decomposition of signed integers.
//!
//! A value `d` is either zero or `sign · (1 << msb | rest)` with
//! `rest < 1 << msb`. The MSB alphabet has 33 symbols: [`MSB_ZERO`] and
//! `1 + msb` for `msb` in `0..32`. Rest bits are coded from the bit plane just
//! below the MSB down to plane 0, each in a context keyed by `(msb, plane)`.

use crate::coder::{BitContext, Decoder, Encoder, SymbolContext};
use crate::error::CodecError;

/// MSB symbol reserved for a zero value.
pub const MSB_ZERO: usize = 0;
/// Size of the MSB alphabet: 32 bit positions plus zero.
pub const MSB_ALPHABET: usize = 33;

/// A signed value split into bit-plane parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitPlaneForm {
    Zero,
    NonZero {
        negative: bool,
        /// Index of the leading one of the magnitude, `0..32`.
        msb: u8,
        /// The `msb` bits below the leading one.
        rest: u32,
    },
}

impl BitPlaneForm {
    /// # Panics
    ///
    /// If `|value| >= 2^32`.
    pub fn split(value: i64) -> Self {
        if value == 0 {
            return BitPlaneForm::Zero;
        }
        let mag = value.unsigned_abs();
        assert!(
            mag <= u64::from(u32::MAX),
            "magnitude {mag} exceeds 32 bits"
        );
        let mag = mag as u32;
        let msb = 31 - mag.leading_zeros() as u8;
        BitPlaneForm::NonZero {
            negative: value < 0,
            msb,
            rest: mag ^ (1 << msb),
        }
    }

    pub fn join(self) -> i64 {
        match self {
            BitPlaneForm::Zero => 0,
            BitPlaneForm::NonZero {
                negative,
                msb,
                rest,
            } => {
                let mag = i64::from((1u32 << msb) | rest);
                if negative {
                    -mag
                } else {
                    mag
                }
            }
        }
    }

    pub fn msb_symbol(self) -> usize {
        match self {
            BitPlaneForm::Zero => MSB_ZERO,
            BitPlaneForm::NonZero { msb, .. } => 1 + msb as usize,
        }
    }
}

/// Context tables for the rest bits: one binary context per `(msb, plane)`.
#[derive(Debug, Clone)]
pub struct RestContexts {
    ctx: [[BitContext; 32]; 32],
}

impl Default for RestContexts {
    fn default() -> Self {
        RestContexts {
            ctx: [[BitContext::new(); 32]; 32],
        }
    }
}

impl RestContexts {
    pub fn encode(&mut self, enc: &mut Encoder, msb: u8, rest: u32) {
        let row = &mut self.ctx[msb as usize];
        for plane in (0..msb as usize).rev() {
            enc.encode_bit(&mut row[plane], (rest >> plane) & 1 == 1);
        }
    }

    pub fn decode(&mut self, dec: &mut Decoder<'_>, msb: u8) -> Result<u32, CodecError> {
        let row = &mut self.ctx[msb as usize];
        let mut rest = 0u32;
        for plane in (0..msb as usize).rev() {
            if dec.decode_bit(&mut row[plane])? {
                rest |= 1 << plane;
            }
        }
        Ok(rest)
    }
}

/// All bit-plane contexts bundled for use with a single coder, for streams
/// that carry small integers next to other symbols (lengths, gaps).
#[derive(Debug, Clone)]
pub struct MagnitudeModel {
    msb: SymbolContext,
    rest: RestContexts,
}

impl Default for MagnitudeModel {
    fn default() -> Self {
        MagnitudeModel {
            msb: SymbolContext::new(MSB_ALPHABET),
            rest: RestContexts::default(),
        }
    }
}

impl MagnitudeModel {
    pub fn encode(&mut self, enc: &mut Encoder, value: u32) {
        let form = BitPlaneForm::split(i64::from(value));
        enc.encode_symbol(&mut self.msb, form.msb_symbol());
        if let BitPlaneForm::NonZero { msb, rest, .. } = form {
            self.rest.encode(enc, msb, rest);
        }
    }

    pub fn decode(&mut self, dec: &mut Decoder<'_>) -> Result<u32, CodecError> {
        let sym = dec.decode_symbol(&mut self.msb)?;
        if sym == MSB_ZERO {
            return Ok(0);
        }
        let msb = (sym - 1) as u8;
        let rest = self.rest.decode(dec, msb)?;
        Ok((1u32 << msb) | rest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exhaustive_small_magnitudes() {
        for mag in 1i64..(1 << 16) {
            for v in [mag, -mag] {
                let f = BitPlaneForm::split(v);
                assert_eq!(f.join(), v);
                if let BitPlaneForm::NonZero { msb, rest, .. } = f {
                    assert!(rest < 1 << msb);
                    assert_eq!(f.msb_symbol(), 1 + msb as usize);
                } else {
                    panic!("nonzero split to zero");
                }
            }
        }
        assert_eq!(BitPlaneForm::split(0), BitPlaneForm::Zero);
        assert_eq!(BitPlaneForm::Zero.msb_symbol(), MSB_ZERO);
    }

    #[test]
    fn random_wide_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100_000 {
            let v: i64 = rng.random_range(-(u32::MAX as i64)..=u32::MAX as i64);
            assert_eq!(BitPlaneForm::split(v).join(), v);
        }
        let f = BitPlaneForm::split(u32::MAX as i64);
        assert_eq!(f.msb_symbol(), 32);
    }

    #[test]
    fn magnitude_model_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let values: Vec<u32> = (0..5000)
            .map(|i| {
                if i % 7 == 0 {
                    0
                } else {
                    rng.random::<u32>() >> rng.random_range(0..32)
                }
            })
            .chain([u32::MAX, 1, 0])
            .collect();
        let mut model = MagnitudeModel::default();
        let mut enc = Encoder::new();
        for &v in &values {
            model.encode(&mut enc, v);
        }
        let bytes = enc.finish();
        let mut model = MagnitudeModel::default();
        let mut dec = Decoder::new(&bytes).unwrap();
        for &v in &values {
            assert_eq!(model.decode(&mut dec).unwrap(), v);
        }
        dec.finish().unwrap();
    }
}
