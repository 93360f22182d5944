//! Operand normalization: leading-one position and fractional mantissa.
//!
//! A nonzero operand `v` of width `N` decomposes as `v = 2^n · (1 + X)`
//! where `n` is the index of the most significant set bit and `X ∈ [0, 1)`
//! is held as an integer with `N−1` fractional bits. Keeping mantissas as
//! scaled integers makes every downstream step exact and bit-reproducible.

/// Narrowest supported operand width.
pub const MIN_WIDTH: u32 = 4;
/// Widest supported operand width (products still fit in u64).
pub const MAX_WIDTH: u32 = 32;

/// An operand factored into `2^lod · (1 + mantissa / 2^(width-1))`.
///
/// Zero has no leading one; it carries an explicit flag (with `lod` and
/// `mantissa` both 0) and is short-circuited by every multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizedOperand {
    /// Index of the most significant set bit (0 when `is_zero`).
    pub lod: u32,
    /// Fraction X scaled by `2^(width-1)`.
    pub mantissa: u64,
    /// Operand width N in bits.
    pub width: u32,
    pub is_zero: bool,
}

/// Decompose `value` (must satisfy `value < 2^width`) into leading-one
/// position and left-aligned mantissa. Total function: zero is flagged.
#[inline]
pub fn normalize(value: u64, width: u32) -> NormalizedOperand {
    debug_assert!((MIN_WIDTH..=MAX_WIDTH).contains(&width));
    debug_assert!(width == 64 || value < 1u64 << width);
    if value == 0 {
        return NormalizedOperand {
            lod: 0,
            mantissa: 0,
            width,
            is_zero: true,
        };
    }
    let lod = 63 - value.leading_zeros();
    let frac = width - 1;
    NormalizedOperand {
        lod,
        mantissa: (value - (1u64 << lod)) << (frac - lod),
        width,
        is_zero: false,
    }
}

/// Top `h` fractional bits of the mantissa (floor truncation, no rounding).
/// Requires `h <= width − 1`.
#[inline]
pub fn truncate(nm: &NormalizedOperand, h: u32) -> u64 {
    debug_assert!(h >= 1 && h < nm.width);
    nm.mantissa >> (nm.width - 1 - h)
}

/// Inverse of [`normalize`] on its image.
#[inline]
pub fn reconstruct(nm: &NormalizedOperand) -> u64 {
    if nm.is_zero {
        return 0;
    }
    (1u64 << nm.lod) + (nm.mantissa >> (nm.width - 1 - nm.lod))
}
