//! Reference approximate multipliers used for error-ordering comparisons.
//!
//! Three classic truncation-family designs, each reimplemented as a
//! bit-exact behavioral model from its published one-paragraph description.
//! Field-alignment choices that the summaries leave open are documented on
//! each function; the analysis suite leans on error orderings rather than
//! bit-level fidelity to the original RTL.

use crate::mantissa;

/// Dynamic-range multiplier: capture `m` bits starting at each operand's
/// leading one, force the captured LSB to 1, multiply the captures exactly,
/// and shift back by the dropped bit counts.
///
/// The forced LSB halves the truncation bias (the dropped tail averages half
/// an ULP of the capture). It applies to short operands too: a value with
/// fewer than `m` significant bits is used as-is except its bit 0 is set,
/// so odd short operands are handled exactly.
#[inline]
pub fn mul_drum(a: u64, b: u64, m: u32) -> u64 {
    debug_assert!(m >= 3);
    if a == 0 || b == 0 {
        return 0;
    }
    let cap = |v: u64| {
        let n = 63 - v.leading_zeros();
        let drop = n.saturating_sub(m - 1);
        ((v >> drop) | 1, drop)
    };
    let (ca, sa) = cap(a);
    let (cb, sb) = cap(b);
    (ca * cb) << (sa + sb)
}

/// Static-segment multiplier: the `m`-bit capture window may only start at
/// the fixed positions `{0, m, 2m, ...}`; each operand uses the window
/// whose start is nearest below its leading one (so the leading one always
/// falls inside the window). Captures are multiplied exactly and rescaled.
///
/// With fixed windows there is no per-operand alignment logic — the price
/// is that up to `m−1` leading positions of the window can be zero,
/// costing accuracy against the dynamic variant at equal `m`.
#[inline]
pub fn mul_dsm(a: u64, b: u64, m: u32) -> u64 {
    debug_assert!(m >= 3);
    if a == 0 || b == 0 {
        return 0;
    }
    let cap = |v: u64| {
        let n = 63 - v.leading_zeros();
        let start = n - n % m;
        ((v >> start) & ((1u64 << m) - 1), start)
    };
    let (ca, sa) = cap(a);
    let (cb, sb) = cap(b);
    (ca * cb) << (sa + sb)
}

/// Truncate-and-round-to-odd multiplier: normalize both operands, keep the
/// top `h` mantissa bits, and multiply the `(h+1)`-bit significands
/// (leading one ++ kept field) exactly; rescale by `2^(nA+nB−2h)` with
/// floor.
///
/// Field alignment (the published summary leaves this open; these choices
/// are what this model means by TOSAM(t, h)):
/// - Both the sum and product contributions come from the same rounded
///   fields: `(1+X̂)(1+Ŷ) = 1 + X̂ + Ŷ + X̂·Ŷ` falls out of the one
///   significand product, so no separate sum-field width exists.
/// - `t >= 1` enables the rounding stage: the kept field's LSB is forced to
///   1 ("round toward odd"), the zero-logic unbiasing of the truncated
///   tail. All `t >= 1` capture identical fields at this behavioral level;
///   `t` additionally sizes the correction adder in the cost model only.
/// - `t = 0` drops the rounding stage, leaving plain truncation.
#[inline]
pub fn mul_tosam(a: u64, b: u64, width: u32, t: u32, h: u32) -> u64 {
    debug_assert!(t < h && h >= 3 && h < width);
    if a == 0 || b == 0 {
        return 0;
    }
    let na = mantissa::normalize(a, width);
    let nb = mantissa::normalize(b, width);
    let force = if t >= 1 { 1 } else { 0 };
    let xf = mantissa::truncate(&na, h) | force;
    let yf = mantissa::truncate(&nb, h) | force;
    let acc = ((1u64 << h) + xf) as u128 * ((1u64 << h) + yf) as u128;
    ((acc << (na.lod + nb.lod)) >> (2 * h)) as u64
}
