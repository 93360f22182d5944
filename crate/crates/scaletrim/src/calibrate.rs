//! Offline calibration: least-squares slope `alpha` and its power-of-two
//! exponent `delta_ee`.
//!
//! The product of two normalized operands is `2^(n_A+n_B) · (1 + X + Y + XY)`.
//! After truncating mantissas, the term `X + Y + XY` is approximated by
//! `alpha · S` with `S = X_h + Y_h`. `alpha` is the origin-constrained
//! least-squares slope over the exhaustive grid of mantissa pairs at
//! `n_ref − 1` fractional bits:
//!
//! ```text
//! alpha = Σ T·S / Σ S²,   T = X + Y + X·Y
//! ```
//!
//! Both sums are computed as exact integers (`T` at `2w` fractional bits,
//! `S` at `h`, with `w = n_ref − 1`), so they are independent of iteration
//! order and worker count; the single floating-point step is the final
//! division. `alpha − 1` is then floored to a power of two, `2^delta_ee`,
//! so the runtime can realize the slope with one shift-add; the residual
//! bias of flooring is exactly what the compensation table absorbs.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::{Error, Result};

/// Calibration output: slope, exponent, and fit quality for one `(h, n_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    /// Truncation width the fit was performed for.
    pub h: u32,
    /// Reference grid resolution: mantissas with `n_ref − 1` fractional bits.
    pub n_ref: u32,
    /// Least-squares slope, in (1, 2) for every admissible h.
    pub alpha: f64,
    /// Floor of log2(alpha − 1); 0 until [`round_to_pow2`] runs.
    pub delta_ee: i32,
    /// Mean of (T − alpha·S)² over the fit grid.
    pub residual_mse: f64,
}

fn check_grid(h: u32, n_ref: u32) -> Result<()> {
    if !(3..=14).contains(&n_ref) {
        return Err(Error::InvalidNRef(n_ref));
    }
    if h < 2 || h > n_ref - 1 {
        return Err(Error::InvalidTruncation {
            h,
            limit: n_ref - 1,
        });
    }
    Ok(())
}

/// Integer row contribution to Σ T·S and Σ S² for a fixed first mantissa.
///
/// `t = ((i+j) << w) + i·j` is T at 2w fractional bits; `s = i_h + j_h` is
/// S at h fractional bits. Products are accumulated in u128 (they overflow
/// u64 for n_ref ≥ 13).
#[inline]
fn fit_row(i: u64, w: u32, h: u32) -> (u128, u128) {
    let ih = i >> (w - h);
    let mut num = 0u128;
    let mut den = 0u128;
    for j in 0..1u64 << w {
        let s = ih + (j >> (w - h));
        let t = ((i + j) << w) + i * j;
        num += (t * s) as u128;
        den += (s * s) as u128;
    }
    (num, den)
}

/// Fit the slope (and residual) for truncation width `h` on the exhaustive
/// `n_ref` grid. `delta_ee` is left at 0; see [`round_to_pow2`].
pub fn fit_alpha(h: u32, n_ref: u32) -> Result<FitParams> {
    check_grid(h, n_ref)?;
    let w = n_ref - 1;

    #[cfg(feature = "parallel")]
    let (num, den) = (0..1u64 << w)
        .into_par_iter()
        .map(|i| fit_row(i, w, h))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    #[cfg(not(feature = "parallel"))]
    let (num, den) = (0..1u64 << w)
        .map(|i| fit_row(i, w, h))
        .fold((0, 0), |a: (u128, u128), b| (a.0 + b.0, a.1 + b.1));

    // alpha = (num / den) · 2^(h − 2w); the power-of-two rescale is exact.
    let alpha = (num as f64 / den as f64) * (h as f64 - 2.0 * w as f64).exp2();

    Ok(FitParams {
        h,
        n_ref,
        alpha,
        delta_ee: 0,
        residual_mse: residual_mse(h, n_ref, alpha),
    })
}

/// Mean squared fit residual over the grid, with a fixed row-major merge
/// order so parallel and serial runs agree bit for bit.
fn residual_mse(h: u32, n_ref: u32, alpha: f64) -> f64 {
    let w = n_ref - 1;
    let row = |i: u64| -> f64 {
        let ih = i >> (w - h);
        let mut acc = 0.0;
        for j in 0..1u64 << w {
            let t = ((((i + j) << w) + i * j) as f64) * (-2.0 * w as f64).exp2();
            let s = ((ih + (j >> (w - h))) as f64) * (-(h as f64)).exp2();
            let d = t - alpha * s;
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

/// Populate `delta_ee` = floor(log2(alpha − 1)): the greatest integer with
/// `2^delta_ee <= alpha − 1`. Flooring (not nearest) keeps the shift-add
/// estimate below the true slope; the compensation table absorbs the bias.
pub fn round_to_pow2(fp: FitParams) -> Result<FitParams> {
    if !(fp.alpha > 1.0 && fp.alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(fp.alpha));
    }
    let mut delta_ee = (fp.alpha - 1.0).log2().floor() as i32;
    // Harden against log2/floor boundary rounding: enforce the bracket
    // 2^delta_ee <= alpha − 1 < 2^(delta_ee + 1) exactly.
    while (delta_ee as f64).exp2() > fp.alpha - 1.0 {
        delta_ee -= 1;
    }
    while ((delta_ee + 1) as f64).exp2() <= fp.alpha - 1.0 {
        delta_ee += 1;
    }
    Ok(FitParams { delta_ee, ..fp })
}

/// Full calibration: fit the slope, then derive the exponent.
pub fn calibrate(h: u32, n_ref: u32) -> Result<FitParams> {
    round_to_pow2(fit_alpha(h, n_ref)?)
}
