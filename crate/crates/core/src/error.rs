//! Error type shared by every module in the crate.
//!
//! Recoverable misuse (bad configuration, malformed files, empty inputs)
//! comes back as [`Error`]. Hot-path shape violations inside inner loops
//! (score/feature length mismatches) are programmer errors and panic via
//! `assert!` instead; the boundary is documented on each function.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Class prior or tuple size outside the supported domain.
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    /// A configuration value outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    Empty(String),

    /// Dimensions of two inputs disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A labeled pool lacks one of the two classes.
    #[error("pool missing a class: {0}")]
    MissingClass(String),

    /// An exhaustive enumeration was requested beyond the supported size.
    #[error("enumeration too large: {0}")]
    TooLarge(String),

    /// An IDX file declared a magic number this reader does not support.
    #[error("unsupported IDX magic 0x{0:08x}")]
    UnsupportedIdxMagic(u32),

    /// A data file failed structural validation (magic, version, length).
    #[error("bad data file: {0}")]
    BadFormat(String),

    /// A string failed to parse as one of the documented enum tokens.
    #[error("unrecognized token: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
