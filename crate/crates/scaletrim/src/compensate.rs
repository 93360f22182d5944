//! Piecewise-constant error compensation.
//!
//! After linearization the normalized estimate of `T = X + Y + XY` is
//! `(1 + 2^delta_ee) · S` with `S = X_h + Y_h`. The residual
//! `D = T − (1 + 2^delta_ee)·S` is averaged over `M` equal-width segments
//! of `S ∈ [0, 2)` and stored as signed fixed-point constants with
//! [`FRAC_LUT`] fractional bits. Segment lookup is a pure bit-slice of the
//! `(h+1)`-bit sum — the cheapest possible mux index — which is why `M`
//! must be a power of two.
//!
//! Table construction is exact: residuals are accumulated as integers over
//! the calibration grid and each mean is quantized once, so identical
//! parameters always produce identical tables.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::calibrate::FitParams;
use crate::{Error, Result};

/// Fractional bits of each stored compensation constant.
pub const FRAC_LUT: u32 = 8;

/// Bits per hardwired table entry: sign + integer + [`FRAC_LUT`] fraction.
pub const LUT_ENTRY_BITS: u32 = 10;

/// An M-entry compensation table for one truncation width.
///
/// `entries[i]` holds `C_i · 2^FRAC_LUT` as a signed integer; `|C_i| < 1`
/// always (residuals are means of values in (−2, 2) and empirically well
/// inside (−1, 1)). `m == 0` means compensation is disabled and `entries`
/// is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompTable {
    pub h: u32,
    pub m: u32,
    pub entries: Vec<i32>,
}

pub(crate) fn check_m(m: u32, h: u32) -> Result<u32> {
    if m == 0 {
        return Ok(0);
    }
    if !m.is_power_of_two() || m < 4 || m.ilog2() > h + 1 {
        return Err(Error::InvalidSegments { m, h });
    }
    Ok(m.ilog2())
}

/// Map a truncated-mantissa sum `k` (i.e. `S = k / 2^h`, `k < 2^(h+1)`) to
/// its segment: equal-width partition of `S ∈ [0, 2)`, selected by the top
/// `log2 m` bits of the sum.
#[inline]
pub fn segment_index(k: u64, h: u32, m: u32) -> usize {
    debug_assert!(m.is_power_of_two() && m.ilog2() <= h + 1);
    debug_assert!(k < 1 << (h + 1));
    (k >> (h + 1 - m.ilog2())) as usize
}

/// Fixed-point geometry of one table build: grid mantissa width, kept
/// bits, scale exponent magnitude, common fractional width, log2(m).
#[derive(Clone, Copy)]
struct RowGeom {
    w: u32,
    h: u32,
    e: u32,
    lcd: u32,
    lm: u32,
}

/// Integer residual sums per segment for one row of the calibration grid.
///
/// Residuals are carried at `lcd = max(2w, h+e)` fractional bits, the least
/// width at which `T`, `S`, and `2^delta_ee·S` are all exact.
fn table_row(i: u64, g: RowGeom, sums: &mut [i128], counts: &mut [u64]) {
    let ih = i >> (g.w - g.h);
    for j in 0..1u64 << g.w {
        let jh = j >> (g.w - g.h);
        let k = ih + jh;
        let seg = (k >> (g.h + 1 - g.lm)) as usize;
        let t = (((i + j) << g.w) + i * j) << (g.lcd - 2 * g.w);
        let s = (k << (g.lcd - g.h)) + (k << (g.lcd - g.h - g.e));
        sums[seg] += t as i128 - s as i128;
        counts[seg] += 1;
    }
}

/// Round `num/den` to the nearest integer, ties away from zero (`den > 0`).
fn round_half_away(num: i128, den: i128) -> i32 {
    debug_assert!(den > 0);
    let q = if num >= 0 {
        (2 * num + den) / (2 * den)
    } else {
        -((2 * (-num) + den) / (2 * den))
    };
    q as i32
}

/// Build the compensation table for `fp` (which must carry a fitted
/// `delta_ee`) with `m` segments on the exhaustive `n_ref` grid.
///
/// Each entry is the exact per-segment mean of `D`, quantized once to
/// [`FRAC_LUT`] bits with round-half-away-from-zero (avoiding systematic
/// shrink toward zero). Segments no grid pair falls into get 0.
pub fn build_table(fp: &FitParams, m: u32, n_ref: u32) -> Result<CompTable> {
    let h = fp.h;
    let lm = check_m(m, h)?;
    if m == 0 {
        return Ok(CompTable {
            h,
            m,
            entries: Vec::new(),
        });
    }
    if !(3..=14).contains(&n_ref) || h > n_ref - 1 {
        return Err(Error::InvalidNRef(n_ref));
    }
    if fp.delta_ee >= 0 {
        return Err(Error::AlphaOutOfRange(fp.alpha));
    }
    let w = n_ref - 1;
    let e = fp.delta_ee.unsigned_abs();
    let geom = RowGeom {
        w,
        h,
        e,
        lcd: (2 * w).max(h + e),
        lm,
    };

    let zero = || (vec![0i128; m as usize], vec![0u64; m as usize]);
    let merge = |mut a: (Vec<i128>, Vec<u64>), b: (Vec<i128>, Vec<u64>)| {
        for (x, y) in a.0.iter_mut().zip(&b.0) {
            *x += y;
        }
        for (x, y) in a.1.iter_mut().zip(&b.1) {
            *x += y;
        }
        a
    };
    let row = |i: u64| {
        let mut part = zero();
        table_row(i, geom, &mut part.0, &mut part.1);
        part
    };

    // Integer sums: merge order is irrelevant, so plain parallel reduce.
    #[cfg(feature = "parallel")]
    let (sums, counts) = (0..1u64 << w).into_par_iter().map(row).reduce(zero, merge);
    #[cfg(not(feature = "parallel"))]
    let (sums, counts) = (0..1u64 << w).map(row).fold(zero(), merge);

    let entries = sums
        .iter()
        .zip(&counts)
        .map(|(&sum, &cnt)| {
            if cnt == 0 {
                0
            } else {
                // C_i = round(mean · 2^FRAC_LUT), mean = sum / (cnt · 2^lcd)
                round_half_away(sum << FRAC_LUT, (cnt as i128) << geom.lcd)
            }
        })
        .collect();
    Ok(CompTable { h, m, entries })
}

/// Per-segment pair counts on the grid (diagnostics / tests).
pub fn segment_counts(h: u32, m: u32, n_ref: u32) -> Result<Vec<u64>> {
    let lm = check_m(m, h)?;
    let w = n_ref - 1;
    let mut counts = vec![0u64; m as usize];
    for i in 0..1u64 << w {
        let ih = i >> (w - h);
        for j in 0..1u64 << w {
            let k = ih + (j >> (w - h));
            counts[(k >> (h + 1 - lm)) as usize] += 1;
        }
    }
    Ok(counts)
}

/// Mean squared normalized error over the calibration grid, with or without
/// a compensation table: mean of `(D − C_seg)²` (or `D²` when `table` is
/// `None` or empty). Used to verify that compensation can only help.
pub fn grid_mse(h: u32, delta_ee: i32, table: Option<&CompTable>, n_ref: u32) -> f64 {
    let w = n_ref - 1;
    let e = delta_ee.unsigned_abs();
    let entries = table.map(|t| t.entries.as_slice()).unwrap_or(&[]);
    let lm = table
        .map(|t| if t.m > 0 { t.m.ilog2() } else { 0 })
        .unwrap_or(0);
    let row = |i: u64| -> f64 {
        let ih = i >> (w - h);
        let mut acc = 0.0;
        for j in 0..1u64 << w {
            let jh = j >> (w - h);
            let k = ih + jh;
            let t = ((((i + j) << w) + i * j) as f64) * (-2.0 * w as f64).exp2();
            let s = (k as f64) * (-(h as f64)).exp2() + (k as f64) * (-((h + e) as f64)).exp2();
            let mut d = t - s;
            if !entries.is_empty() {
                d -= entries[(k >> (h + 1 - lm)) as usize] as f64 / (1u64 << FRAC_LUT) as f64;
            }
            acc += d * d;
        }
        acc
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = (0..1u64 << w).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = (0..1u64 << w).map(row).collect();

    rows.iter().sum::<f64>() / (1u64 << (2 * w)) as f64
}

/// Render the table as two's-complement hardwiring constants: one
/// [`LUT_ENTRY_BITS`]-bit hex literal per segment.
pub fn export_hex(tbl: &CompTable) -> Vec<String> {
    tbl.entries
        .iter()
        .map(|&c| format!("0x{:03X}", (c as u32) & 0x3FF))
        .collect()
}

/// Parse lines produced by [`export_hex`] back into table entries
/// (round-trip support for the exported artifact).
pub fn import_hex<'a, I: IntoIterator<Item = &'a str>>(lines: I) -> Result<Vec<i32>> {
    lines
        .into_iter()
        .map(|line| {
            let s = line.trim();
            let hex = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"));
            let v = hex
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .filter(|&v| v < 1 << LUT_ENTRY_BITS)
                .ok_or_else(|| Error::BadHexEntry(s.to_string()))?;
            // Sign-extend from bit LUT_ENTRY_BITS-1.
            Ok(if v & 0x200 != 0 {
                v as i32 - 0x400
            } else {
                v as i32
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::calibrate;

    // Golden tables from the independent exact-rational oracle (n_ref = 8).
    const GOLDEN: &[(u32, u32, &[i32])] = &[
        (3, 4, &[21, 15, 50, 113]),
        (3, 8, &[27, 18, 14, 15, 37, 70, 107, 141]),
        (4, 4, &[1, -6, 26, 89]),
        (4, 8, &[8, -1, -6, -6, 13, 45, 81, 117]),
        (5, 4, &[-9, -16, 14, 77]),
        (5, 8, &[-2, -11, -16, -16, 1, 33, 69, 105]),
    ];

    #[test]
    fn golden_tables_nref8() {
        for &(h, m, want) in GOLDEN {
            let fp = calibrate(h, 8).unwrap();
            let tbl = build_table(&fp, m, 8).unwrap();
            assert_eq!(tbl.entries, want, "h={h} m={m}");
        }
    }

    #[test]
    fn empty_segment_gets_zero() {
        // At m = 2^(h+1) the top segment needs k = 2^(h+1) − 1, but
        // k = X_h + Y_h <= 2^(h+1) − 2: the segment is empty.
        let fp = calibrate(3, 8).unwrap();
        let tbl = build_table(&fp, 16, 8).unwrap();
        assert_eq!(
            tbl.entries,
            &[31, 25, 20, 17, 14, 14, 14, 16, 30, 45, 62, 80, 99, 119, 141, 0]
        );
    }

    #[test]
    fn golden_segment_counts() {
        assert_eq!(segment_counts(3, 4, 8).unwrap(), &[2560, 6656, 5632, 1536]);
        let c = segment_counts(3, 8, 8).unwrap();
        assert_eq!(c, &[768, 1792, 2816, 3840, 3328, 2304, 1280, 256]);
        assert_eq!(
            c.iter().sum::<u64>(),
            1 << 14,
            "counts cover the whole grid"
        );
    }

    #[test]
    fn segment_index_examples() {
        assert_eq!(segment_index(8, 3, 4), 2, "S = 1.0 at h=3, m=4");
        assert_eq!(segment_index(0, 3, 8), 0);
        assert_eq!(segment_index(31, 4, 4), 3, "S = 1.9375 at h=4, m=4");
    }

    #[test]
    fn top_segment_compensates_upward() {
        // Near S = 2 the shift-add estimate undershoots T, so the last
        // entry must be positive.
        let fp = calibrate(3, 8).unwrap();
        let tbl = build_table(&fp, 4, 8).unwrap();
        assert!(tbl.entries[3] > 0);
    }

    #[test]
    fn zero_sum_segment_is_nonnegative() {
        // The segment containing S = 0 only sees pairs with X_h = Y_h = 0,
        // where D = X + Y + XY >= 0, so C_0 >= 0.
        for m in [4u32, 8, 16] {
            let fp = calibrate(3, 8).unwrap();
            let tbl = build_table(&fp, m, 8).unwrap();
            assert!(tbl.entries[0] >= 0, "m={m}");
        }
    }

    #[test]
    fn disabled_and_invalid_m() {
        let fp = calibrate(3, 8).unwrap();
        assert!(build_table(&fp, 0, 8).unwrap().entries.is_empty());
        assert!(build_table(&fp, 3, 8).is_err(), "not a power of two");
        assert!(build_table(&fp, 2, 8).is_err(), "below minimum of 4");
        assert!(build_table(&fp, 32, 8).is_err(), "m > 2^(h+1)");
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_half_away(3, 2), 2, "1.5 -> 2");
        assert_eq!(round_half_away(-3, 2), -2, "-1.5 -> -2");
        assert_eq!(round_half_away(1, 4), 0);
        assert_eq!(round_half_away(-1, 4), 0);
        assert_eq!(round_half_away(5, 4), 1);
        assert_eq!(round_half_away(-5, 4), -1);
    }

    #[test]
    fn quantized_table_still_reduces_grid_mse() {
        for &(h, m, _) in GOLDEN {
            let fp = calibrate(h, 8).unwrap();
            let tbl = build_table(&fp, m, 8).unwrap();
            let without = grid_mse(h, fp.delta_ee, None, 8);
            let with = grid_mse(h, fp.delta_ee, Some(&tbl), 8);
            // Per-segment means minimize MSE; quantization can cost at most
            // one LUT ulp per entry.
            assert!(
                with <= without + (-(FRAC_LUT as f64)).exp2(),
                "h={h} m={m}: {with} vs {without}"
            );
        }
    }

    #[test]
    fn golden_grid_mse_values() {
        let fp = calibrate(3, 8).unwrap();
        let tbl = build_table(&fp, 4, 8).unwrap();
        let without = grid_mse(3, fp.delta_ee, None, 8);
        let with = grid_mse(3, fp.delta_ee, Some(&tbl), 8);
        assert!(
            (without - 0.043579393066465855).abs() < 1e-12,
            "without={without}"
        );
        assert!((with - 0.009840999729931355).abs() < 1e-12, "with={with}");
    }

    #[test]
    fn hex_export_and_reimport() {
        let fp = calibrate(3, 8).unwrap();
        let tbl = build_table(&fp, 4, 8).unwrap();
        let hex = export_hex(&tbl);
        assert_eq!(hex, &["0x015", "0x00F", "0x032", "0x071"]);
        let back = import_hex(hex.iter().map(String::as_str)).unwrap();
        assert_eq!(back, tbl.entries);

        // Signed round-trip: 0.25 and −0.25 at 8 fractional bits.
        let signed = CompTable {
            h: 3,
            m: 4,
            entries: vec![64, -64, 0, -1],
        };
        let hex = export_hex(&signed);
        assert_eq!(hex, &["0x040", "0x3C0", "0x000", "0x3FF"]);
        assert_eq!(
            import_hex(hex.iter().map(String::as_str)).unwrap(),
            signed.entries
        );

        assert!(import_hex(["0xGGG"]).is_err());
        assert!(import_hex(["0x400"]).is_err(), "out of 10-bit range");
    }
}
