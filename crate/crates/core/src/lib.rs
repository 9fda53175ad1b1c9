//! Bit-exact, cycle-accounting simulator of a fixed-point CNN accelerator
//! datapath.
//!
//! The crate models the three building blocks of a streaming convolution
//! engine and accounts for their hardware cost:
//!
//! * [`tree`] — fully parallel multiply-add reduction trees in two layouts:
//!   the classic zero-padded power-of-two tree and an improved tree that
//!   forwards the odd leftover operand instead of padding.
//! * [`dataflow`] — the sliding-window line buffer that turns a
//!   one-sample-per-cycle stream into one convolution window per cycle, plus
//!   the channel-parallel accumulator bank and the full layer/network runner.
//! * [`reference`] — a golden direct-evaluation convolution path every
//!   simulator output is checked against, bit for bit.
//!
//! All arithmetic is Q8.8 fixed point with exact wide accumulation
//! ([`fixedpoint`]), so results are independent of evaluation order and of
//! the number of worker threads.

pub mod dataflow;
pub mod error;
pub mod fixedpoint;
mod parallel;
pub mod perf;
pub mod reference;
pub mod tensor;
pub mod tree;

pub use error::{Error, Result};
pub use fixedpoint::{Acc40, Fixed16};
pub use tensor::{ConvGeometry, FeatureMap, KernelSet, Tensor};
