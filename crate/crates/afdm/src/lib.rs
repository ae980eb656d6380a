//! Link-level simulation of chirp-multicarrier (AFDM) transmission with
//! index modulation and cyclic delay transmit diversity over linear
//! time-varying channels.
//!
//! The crate is organized around the signal path:
//!
//! - [`types`]: waveform, index-modulation, and channel configuration.
//! - [`transform`]: discrete affine Fourier transform pair and the
//!   chirp-periodic prefix.
//! - [`im`]: bit-to-symbol mapping for the two index-modulation schemes.
//! - [`channel`]: LTV channel sampling, per-path subchannel matrices, and
//!   the effective chirp-domain channel.
//! - [`detect`]: ML, double-layer message passing, single-layer MP, and
//!   MMSE detectors plus FLOP accounting.
//! - [`analysis`]: pairwise error probability, ABEP union bound, and
//!   diversity order.
//! - [`sim`]: Monte Carlo BER experiment driver.

pub mod analysis;
pub mod channel;
pub mod detect;
pub mod im;
pub mod sim;
pub mod transform;
pub mod types;

use thiserror::Error;

/// Errors produced by configuration validation and the simulation pipeline.
#[derive(Debug, Error)]
pub enum AfdmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("codebook of {bits} bits exceeds enumeration guard of {limit} bits")]
    CodebookTooLarge { bits: usize, limit: usize },
    #[error("activation pattern {0:?} is not in the pattern table")]
    PatternNotInTable(Vec<usize>),
    #[error("prefix too short: need at least {needed} samples, have {have}")]
    PrefixTooShort { needed: usize, have: usize },
    #[error("bit string length {actual} does not match frame budget {expected}")]
    BitCountMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AfdmError>;
