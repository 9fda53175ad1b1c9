//! 16-bit fixed-point sample words and the wide accumulator behind them.
//!
//! Samples are Q8.8: 8 integer bits (including sign) and 8 fractional bits,
//! representable range [-128, 128 - 2^-8]. Products of two samples widen to
//! [`Acc40`] (Q24.16, stored in an `i64`), where every addition is exact
//! integer arithmetic. Rounding therefore happens exactly twice per value:
//! once at [`Fixed16::quantize`] and once at [`Acc40::narrow`], both
//! round-to-nearest-even with saturation. Because the accumulator is exact,
//! any reduction order over the same multiset of products yields the same
//! result, which is what lets the simulator parallelize freely.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

/// Fractional bits of the Q8.8 sample format.
pub const FRAC_BITS: u32 = 8;
/// Scale factor 2^FRAC_BITS.
pub const SCALE: f64 = 256.0;
/// Fractional bits of the accumulator format (product of two Q8.8 words).
pub const ACC_FRAC_BITS: u32 = 16;

/// A quantized Q8.8 sample word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed16(i16);

impl Fixed16 {
    pub const ZERO: Fixed16 = Fixed16(0);
    pub const ONE: Fixed16 = Fixed16(1 << FRAC_BITS);
    pub const MIN: Fixed16 = Fixed16(i16::MIN);
    pub const MAX: Fixed16 = Fixed16(i16::MAX);

    #[inline]
    pub const fn from_raw(raw: i16) -> Self {
        Fixed16(raw)
    }

    #[inline]
    pub const fn raw(self) -> i16 {
        self.0
    }

    /// Quantizes a real value: round-to-nearest-even of `v * 2^8`, saturated
    /// to the signed 16-bit range. `v` must be finite; NaN maps to zero.
    pub fn quantize(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "quantize requires a finite input");
        if v.is_nan() {
            return Fixed16(0);
        }
        let scaled = (v * SCALE).round_ties_even();
        Fixed16(scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16)
    }

    #[inline]
    pub fn to_real(self) -> f64 {
        self.0 as f64 / SCALE
    }

    /// Widens to the accumulator format without loss (Q8.8 -> Q24.16).
    #[inline]
    pub const fn widen(self) -> Acc40 {
        Acc40((self.0 as i64) << FRAC_BITS)
    }
}

impl fmt::Display for Fixed16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real())
    }
}

/// Exact product of two samples, widened. Never rounds or saturates.
impl Mul for Fixed16 {
    type Output = Acc40;

    #[inline]
    fn mul(self, rhs: Fixed16) -> Acc40 {
        Acc40(self.0 as i64 * rhs.0 as i64)
    }
}

/// Wide accumulator word (Q24.16 interpretation, at least 40 usable bits).
///
/// Backed by an `i64`, so sums of up to 2^33 worst-case sample products stay
/// exact; the deepest reduction in any supported layer is orders of magnitude
/// below that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Acc40(i64);

impl Acc40 {
    pub const ZERO: Acc40 = Acc40(0);

    #[inline]
    pub const fn from_raw(raw: i64) -> Self {
        Acc40(raw)
    }

    #[inline]
    pub const fn raw(self) -> i64 {
        self.0
    }

    #[inline]
    pub fn to_real(self) -> f64 {
        self.0 as f64 / (1u64 << ACC_FRAC_BITS) as f64
    }

    /// Narrows back to Q8.8: arithmetic shift right by 8 with
    /// round-to-nearest-even, then saturation to the signed 16-bit range.
    pub fn narrow(self) -> Fixed16 {
        let rounded = round_half_even_shr(self.0, FRAC_BITS);
        Fixed16(rounded.clamp(i16::MIN as i64, i16::MAX as i64) as i16)
    }
}

impl Add for Acc40 {
    type Output = Acc40;

    #[inline]
    fn add(self, rhs: Acc40) -> Acc40 {
        Acc40(self.0 + rhs.0)
    }
}

impl AddAssign for Acc40 {
    #[inline]
    fn add_assign(&mut self, rhs: Acc40) {
        self.0 += rhs.0;
    }
}

impl Sum for Acc40 {
    fn sum<I: Iterator<Item = Acc40>>(iter: I) -> Acc40 {
        iter.fold(Acc40::ZERO, |a, b| a + b)
    }
}

/// `v >> bits` with round-to-nearest, ties to even.
fn round_half_even_shr(v: i64, bits: u32) -> i64 {
    let floor = v >> bits;
    let rem = v - (floor << bits); // in [0, 2^bits)
    let half = 1i64 << (bits - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}
