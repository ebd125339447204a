//! Sparse discrete Fourier transform over the centered frequency band.
//!
//! The pipeline recovers the dominant `s` frequencies of a length-`N` signal
//! from far fewer than `N` samples: a periodized Gaussian filter isolates one
//! passband at a time, a truncated semi-discrete convolution evaluates the
//! filtered signal at arbitrary points from a short window of signal entries,
//! and a pluggable inner sparse transform locates the energetic frequencies
//! inside each passband.

pub mod bench;
pub mod conv;
pub mod dft;
pub mod driver;
pub mod filter;
pub mod sft;

use std::fmt;

#[derive(Debug)]
pub enum DsftError {
    /// A parameter fell outside its admissible domain.
    InvalidParam(String),
    Io(std::io::Error),
}

impl fmt::Display for DsftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DsftError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            DsftError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for DsftError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DsftError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for DsftError {
    fn from(e: std::io::Error) -> Self {
        DsftError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, DsftError>;

pub(crate) fn invalid(msg: impl Into<String>) -> DsftError {
    DsftError::InvalidParam(msg.into())
}
