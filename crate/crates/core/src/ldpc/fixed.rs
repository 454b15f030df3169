//! Unsigned fixed-point fractions for hardware-style decoding.
//!
//! A value with `bits` fractional bits is `raw / 2^bits` with
//! `0 <= raw <= 2^bits - 1`, so 1.0 itself is not representable and
//! saturates to `1 - 2^-bits`. Multiplication truncates toward zero.

use serde::{Deserialize, Serialize};

use super::LdpcError;

/// Supported word lengths.
pub const SUPPORTED_BITS: [u32; 3] = [12, 16, 24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedFormat {
    bits: u32,
}

impl FixedFormat {
    pub fn new(bits: u32) -> Result<Self, LdpcError> {
        if SUPPORTED_BITS.contains(&bits) {
            Ok(FixedFormat { bits })
        } else {
            Err(LdpcError::FixedBits(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Largest raw value, `2^bits - 1`.
    pub fn max_raw(self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Smallest positive value, one least-significant unit.
    pub fn lsb(self) -> FixedPoint {
        FixedPoint { raw: 1, fmt: self }
    }

    pub fn zero(self) -> FixedPoint {
        FixedPoint { raw: 0, fmt: self }
    }

    pub fn max(self) -> FixedPoint {
        FixedPoint { raw: self.max_raw(), fmt: self }
    }

    /// Nearest representable value, saturating.
    pub fn from_f64(self, x: f64) -> FixedPoint {
        let scaled = (x * (1u64 << self.bits) as f64).round();
        let raw = if scaled <= 0.0 { 0 } else { (scaled as u64).min(self.max_raw() as u64) as u32 };
        FixedPoint { raw, fmt: self }
    }

    pub fn from_raw(self, raw: u32) -> FixedPoint {
        FixedPoint { raw: raw.min(self.max_raw()), fmt: self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    raw: u32,
    fmt: FixedFormat,
}

impl FixedPoint {
    pub fn raw(self) -> u32 {
        self.raw
    }

    pub fn format(self) -> FixedFormat {
        self.fmt
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / (1u64 << self.fmt.bits) as f64
    }

    pub fn is_zero(self) -> bool {
        self.raw == 0
    }

    /// Truncating product.
    pub fn mul(self, o: FixedPoint) -> FixedPoint {
        debug_assert_eq!(self.fmt, o.fmt);
        FixedPoint { raw: ((self.raw as u64 * o.raw as u64) >> self.fmt.bits) as u32, fmt: self.fmt }
    }

    /// Saturating sum.
    pub fn add(self, o: FixedPoint) -> FixedPoint {
        debug_assert_eq!(self.fmt, o.fmt);
        FixedPoint { raw: (self.raw as u64 + o.raw as u64).min(self.fmt.max_raw() as u64) as u32, fmt: self.fmt }
    }

    /// `1 - x`, saturating at the largest value for `x = 0`.
    pub fn complement(self) -> FixedPoint {
        let one = 1u64 << self.fmt.bits;
        FixedPoint { raw: (one - self.raw as u64).min(self.fmt.max_raw() as u64) as u32, fmt: self.fmt }
    }

    /// Replaces zero by one least-significant unit.
    pub fn clamp_zero(self) -> FixedPoint {
        if self.raw == 0 {
            self.fmt.lsb()
        } else {
            self
        }
    }
}

impl PartialOrd for FixedPoint {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        debug_assert_eq!(self.fmt, o.fmt);
        self.raw.partial_cmp(&o.raw)
    }
}

/// Truncating product.
pub fn fixed_mul(a: FixedPoint, b: FixedPoint) -> FixedPoint {
    a.mul(b)
}

/// Zero-clamps both values, then divides each by their sum:
/// `floor(x 2^bits / (q0 + q1))`, saturating.
pub fn fixed_normalize(q0: FixedPoint, q1: FixedPoint) -> (FixedPoint, FixedPoint) {
    let (q0, q1) = (q0.clamp_zero(), q1.clamp_zero());
    let fmt = q0.fmt;
    let sum = q0.raw as u64 + q1.raw as u64;
    let norm = |x: FixedPoint| fmt.from_raw((((x.raw as u64) << fmt.bits) / sum).min(fmt.max_raw() as u64) as u32);
    (norm(q0), norm(q1))
}
