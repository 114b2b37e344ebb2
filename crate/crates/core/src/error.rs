use core::fmt;

/// Failure while decoding an entropy-coded stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    /// The decoder needed more bytes than the stream holds.
    Truncated,
    /// Decoded symbols describe something impossible (out-of-range position,
    /// inconsistent tree, ...).
    Corrupt(&'static str),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::Truncated => f.write_str("stream truncated"),
            CodecError::Corrupt(what) => write!(f, "corrupt stream: {what}"),
        }
    }
}

/// Failure while building a reference sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefError {
    /// No bases at all.
    Empty,
    /// Positions must fit in 32 bits.
    TooLong(u64),
}

impl fmt::Display for RefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefError::Empty => f.write_str("reference contains no bases"),
            RefError::TooLong(n) => write!(f, "reference has {n} bases, more than 2^32 - 1"),
        }
    }
}

impl core::error::Error for CodecError {}

impl core::error::Error for RefError {}
