use amgc_core::aligner::ConfigError;
use amgc_core::{CodecError, RefError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("FASTQ record {record}: {reason}")]
    Fastq { record: u64, reason: String },

    #[error("FASTA: {0}")]
    Fasta(String),

    #[error("reference: {0}")]
    Reference(#[from] RefError),

    #[error("not an archive (bad magic)")]
    BadMagic,

    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u16),

    #[error("reference digest does not match the archive")]
    DigestMismatch,

    #[error("archive header checksum mismatch")]
    HeaderChecksum,

    #[error("checksum mismatch in block {0}")]
    BlockChecksum(usize),

    #[error("archive truncated")]
    Truncated,

    #[error("corrupt archive: {0}")]
    Corrupt(String),

    #[error("block {block}: {source}")]
    Codec { block: usize, source: CodecError },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index cache: {0}")]
    IndexCache(String),
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::InvalidParameter(e.0.to_string())
    }
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Fastq { .. } | Error::Fasta(_) | Error::Reference(_) => 3,
            Error::Io(_) => 4,
            Error::DigestMismatch => 5,
            Error::HeaderChecksum | Error::BlockChecksum(_) | Error::Corrupt(_) => 6,
            Error::Codec { source, .. } => match source {
                CodecError::Truncated => 7,
                CodecError::Corrupt(_) => 6,
            },
            Error::Truncated => 7,
            Error::BadMagic | Error::UnsupportedVersion(_) => 8,
            Error::InvalidParameter(_) => 9,
            Error::IndexCache(_) => 10,
        }
    }
}
