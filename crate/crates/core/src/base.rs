//! Nucleotide symbols and their 2-bit codes.

/// 2-bit code of `N`-free bases is `0..4`; `N` gets this out-of-band value.
pub const N_CODE: u8 = 4;

pub const ALPHABET: [u8; 4] = *b"ACGT";

/// Maps an uppercase ASCII base to its code (`A=0, C=1, G=2, T=3, N=4`).
/// Anything else is `None`.
#[inline]
pub fn code_of(b: u8) -> Option<u8> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        b'N' => Some(N_CODE),
        _ => None,
    }
}

#[inline]
pub fn ascii_of(code: u8) -> u8 {
    match code {
        0 => b'A',
        1 => b'C',
        2 => b'G',
        3 => b'T',
        _ => b'N',
    }
}

/// Complement of a code; `N` stays `N`.
#[inline]
pub fn complement(code: u8) -> u8 {
    if code < 4 {
        3 - code
    } else {
        N_CODE
    }
}

/// Reverse complement of a code sequence.
pub fn reverse_complement(codes: &[u8]) -> alloc::vec::Vec<u8> {
    codes.iter().rev().map(|&c| complement(c)).collect()
}
