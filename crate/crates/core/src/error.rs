//! Error type shared by every module of the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Kernel does not fit inside the input plane ("valid" convolution only).
    #[error("kernel {kh}x{kw} does not fit input {h}x{w}")]
    KernelTooLarge {
        h: usize,
        w: usize,
        kh: usize,
        kw: usize,
    },

    #[error("stride must be at least 1, got {hs}x{ws}")]
    ZeroStride { hs: usize, ws: usize },

    #[error("invalid dimension: {what}")]
    Dimension { what: String },

    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: String },

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("cannot build a reduction over zero inputs")]
    EmptyReduction,

    #[error("window stream exhausted after {cycles} cycles")]
    StreamExhausted { cycles: u64 },

    #[error("window stream requires a square kernel, got {kh}x{kw}")]
    NonSquareKernel { kh: usize, kw: usize },

    #[error("invalid parallelism: {what}")]
    Parallelism { what: String },

    #[error("cycle count is zero")]
    ZeroCycles,

    #[error("invalid argument: {what}")]
    Invalid { what: String },

    /// A layer in a network description does not chain onto its predecessor.
    #[error("layer {index} ({kind}): {what}")]
    LayerChain {
        index: usize,
        kind: &'static str,
        what: String,
    },

    // Tensor file format errors, one variant per failure mode.
    #[error("{}: bad magic bytes, expected \"CT16\"", path.display())]
    BadMagic { path: PathBuf },

    #[error("{}: unsupported tensor rank {rank}", path.display())]
    BadRank { path: PathBuf, rank: u8 },

    #[error("{}: truncated, needed {needed} bytes but only {got} present", path.display())]
    Truncated {
        path: PathBuf,
        needed: usize,
        got: usize,
    },

    #[error("{}: {extra} trailing bytes after payload", path.display())]
    TrailingData { path: PathBuf, extra: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
