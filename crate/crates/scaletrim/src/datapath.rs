//! Integer-only runtime pipeline.
//!
//! For nonzero operands `a = 2^nA(1+X)`, `b = 2^nB(1+Y)` the approximate
//! product is
//!
//! ```text
//! floor( (1 + S + 2^delta_ee·S + C_i) · 2^(nA+nB) )      S = X_h + Y_h
//! ```
//!
//! The parenthesis is assembled exactly in a fixed-point accumulator with
//! `F = max(h + (−delta_ee), FRAC_LUT)` fractional bits — the least width
//! at which `S`, its shifted copy, and the table entry are all exactly
//! representable — so the only lossy step is the single final floor,
//! mirroring a barrel shifter that drops shifted-out bits.

use crate::compensate::FRAC_LUT;
use crate::config::ScaleTrimConfig;
use crate::mantissa::{self, MAX_WIDTH, MIN_WIDTH};
use crate::{Error, Result};

/// A config compiled for a fixed operand width: shift amounts resolved,
/// table unpacked. Immutable and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct ScaleTrimKernel {
    width: u32,
    h: u32,
    /// −delta_ee (> 0).
    e: u32,
    /// Accumulator fractional bits.
    f: u32,
    /// Right-shift of the (h+1)-bit sum that yields the segment index.
    lut_shift: u32,
    lut: Box<[i32]>,
}

impl ScaleTrimKernel {
    pub fn new(cfg: &ScaleTrimConfig, width: u32) -> Result<Self> {
        cfg.validate()?;
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidWidth(width));
        }
        if cfg.h > width - 1 {
            return Err(Error::InvalidTruncation {
                h: cfg.h,
                limit: width - 1,
            });
        }
        let e = cfg.delta_ee.unsigned_abs();
        Ok(ScaleTrimKernel {
            width,
            h: cfg.h,
            e,
            f: (cfg.h + e).max(FRAC_LUT),
            lut_shift: if cfg.m > 0 {
                cfg.h + 1 - cfg.m.ilog2()
            } else {
                0
            },
            lut: cfg.lut.clone().into_boxed_slice(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Accumulator fractional bits F.
    pub fn frac_bits(&self) -> u32 {
        self.f
    }

    /// The full pipeline. Requires `a, b < 2^width`; the result always fits
    /// u64 for widths up to 32 (the accumulator is < 4·2^F, shifted by at
    /// most 2(width−1) − F).
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        let na = mantissa::normalize(a, self.width);
        let nb = mantissa::normalize(b, self.width);
        let k = mantissa::truncate(&na, self.h) + mantissa::truncate(&nb, self.h);
        let mut acc = (1i64 << self.f)
            + ((k as i64) << (self.f - self.h))
            + ((k as i64) << (self.f - self.h - self.e));
        if !self.lut.is_empty() {
            acc += (self.lut[(k >> self.lut_shift) as usize] as i64) << (self.f - FRAC_LUT);
        }
        // |C_i| < 1 makes acc >= 2^F − (2^F − 1) > 0, but guard anyway: an
        // unsigned product can never go below zero.
        let acc = acc.max(0) as u128;
        ((acc << (na.lod + nb.lod)) >> self.f) as u64
    }

    /// Sign-magnitude wrapper: XOR of the operand signs applied to the
    /// unsigned core. Magnitudes must fit the configured width, which also
    /// rules out `i64::MIN`. Widths up to 31 keep the result in range.
    #[inline]
    pub fn mul_signed(&self, a: i64, b: i64) -> i64 {
        debug_assert!(self.width <= 31);
        let mag = self.mul(a.unsigned_abs(), b.unsigned_abs()) as i64;
        if (a < 0) != (b < 0) {
            -mag
        } else {
            mag
        }
    }
}

/// Widening exact product (the sweep reference). Exact for widths <= 32.
#[inline]
pub fn mul_exact(a: u64, b: u64) -> u64 {
    a * b
}

/// Both operands truncated all the way to their leading one: the crudest
/// member of the family, `2^(nA+nB)` for nonzero inputs.
#[inline]
pub fn mul_pow2_trunc(a: u64, b: u64, width: u32) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    1u64 << (mantissa::normalize(a, width).lod + mantissa::normalize(b, width).lod)
}
