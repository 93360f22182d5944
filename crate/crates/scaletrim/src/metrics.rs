//! Error sweeps: relative-error statistics over exhaustive or sampled
//! operand spaces.
//!
//! Determinism contract: results are bit-identical across worker counts and
//! across the parallel/serial backends. Both backends accumulate one
//! partial sum per `a`-row (`b` innermost) and merge the rows in ascending
//! `a` order, so the floating-point reduction tree never depends on
//! scheduling. Sampled sweeps draw from a fixed-algorithm generator
//! ([`crate::rng::RNG_ALGORITHM`]) and always run sequentially.

use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{Design, Multiplier};
use crate::rng::{PairSampler, RNG_ALGORITHM};
use crate::{Error, Result};

/// Widths above this need an explicit opt-in for exhaustive sweeps: the
/// pair count grows as `4^width`, and 2^34 products is already minutes of
/// work.
pub const EXHAUSTIVE_WIDTH_LIMIT: u32 = 16;

/// Raw error-grid dumps are capped harder because they emit one record per
/// pair.
pub const GRID_WIDTH_LIMIT: u32 = 12;

/// How a sweep covers the operand space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Every pair `(a, b)` in `[0, 2^width)^2`.
    Exhaustive,
    /// `count` seeded pairs. Draws whose exact product is zero still count
    /// against `count`; they are excluded from the statistics and reported,
    /// not redrawn.
    Sampled { count: u64, seed: u64 },
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exhaustive" {
            return Ok(SweepMode::Exhaustive);
        }
        let bad = || {
            Error::InvalidParams(format!(
                "sweep mode {s:?} (want `exhaustive` or `sampled:<count>:seed<seed>`)"
            ))
        };
        let rest = s.strip_prefix("sampled:").ok_or_else(bad)?;
        let (count, seed) = rest.split_once(":seed").ok_or_else(bad)?;
        Ok(SweepMode::Sampled {
            count: count.parse().map_err(|_| bad())?,
            seed: seed.parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SweepMode::Exhaustive => f.write_str("exhaustive"),
            SweepMode::Sampled { count, seed } => write!(f, "sampled:{count}:seed{seed}"),
        }
    }
}

/// Full description of one sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub width: u32,
    pub mode: SweepMode,
    /// Calibration grid width used to resolve `scaletrim` designs.
    pub n_ref: u32,
    /// Opt-in for exhaustive sweeps beyond [`EXHAUSTIVE_WIDTH_LIMIT`].
    pub allow_huge: bool,
}

impl SweepSpec {
    pub fn exhaustive(width: u32) -> Self {
        SweepSpec {
            width,
            mode: SweepMode::Exhaustive,
            n_ref: 8,
            allow_huge: false,
        }
    }

    pub fn sampled(width: u32, count: u64, seed: u64) -> Self {
        SweepSpec {
            width,
            mode: SweepMode::Sampled { count, seed },
            n_ref: 8,
            allow_huge: false,
        }
    }
}

/// Relative-error statistics of one design over one operand space.
///
/// All statistics are percentages. `mared`/`stdared` are the mean and
/// population standard deviation of `|approx − exact| / exact`;
/// `mred`/`stdred` keep the sign (negative mean = the design under-shoots).
/// Pairs with a zero exact product have no relative error; they are
/// excluded and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub design: String,
    pub width: u32,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_algorithm: Option<String>,
    pub pairs_included: u64,
    pub pairs_excluded: u64,
    pub mared_percent: f64,
    pub stdared_percent: f64,
    pub mred_percent: f64,
    pub stdred_percent: f64,
    pub max_ared_percent: f64,
}

/// Streaming accumulator for relative-error moments.
#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    included: u64,
    excluded: u64,
    sum_ared: f64,
    sum_ared_sq: f64,
    sum_red: f64,
    sum_red_sq: f64,
    max_ared: f64,
}

impl Accum {
    #[inline]
    fn add(&mut self, exact: u64, approx: u64) {
        if exact == 0 {
            self.excluded += 1;
            return;
        }
        // The difference is formed in integers so it is exact even when the
        // products themselves exceed 2^53.
        let red = (approx as i128 - exact as i128) as f64 / exact as f64;
        let ared = red.abs();
        self.included += 1;
        self.sum_ared += ared;
        self.sum_ared_sq += ared * ared;
        self.sum_red += red;
        self.sum_red_sq += red * red;
        if ared > self.max_ared {
            self.max_ared = ared;
        }
    }

    #[inline]
    fn merge(&mut self, other: &Accum) {
        self.included += other.included;
        self.excluded += other.excluded;
        self.sum_ared += other.sum_ared;
        self.sum_ared_sq += other.sum_ared_sq;
        self.sum_red += other.sum_red;
        self.sum_red_sq += other.sum_red_sq;
        if other.max_ared > self.max_ared {
            self.max_ared = other.max_ared;
        }
    }

    fn report(&self, design: Design, spec: &SweepSpec) -> ErrorReport {
        let n = self.included as f64;
        let pop_std = |sum: f64, sum_sq: f64| {
            let mean = sum / n;
            (sum_sq / n - mean * mean).max(0.0).sqrt()
        };
        ErrorReport {
            design: design.to_string(),
            width: spec.width,
            mode: spec.mode.to_string(),
            rng_algorithm: match spec.mode {
                SweepMode::Sampled { .. } => Some(RNG_ALGORITHM.to_string()),
                SweepMode::Exhaustive => None,
            },
            pairs_included: self.included,
            pairs_excluded: self.excluded,
            mared_percent: 100.0 * self.sum_ared / n,
            stdared_percent: 100.0 * pop_std(self.sum_ared, self.sum_ared_sq),
            mred_percent: 100.0 * self.sum_red / n,
            stdred_percent: 100.0 * pop_std(self.sum_red, self.sum_red_sq),
            max_ared_percent: 100.0 * self.max_ared,
        }
    }
}

#[inline]
fn row_accum(mul: &Multiplier, a: u64, width: u32) -> Accum {
    let mut acc = Accum::default();
    for b in 0..1u64 << width {
        acc.add(a * b, mul.mul(a, b));
    }
    acc
}

fn check_exhaustive(spec: &SweepSpec) -> Result<()> {
    if spec.width > EXHAUSTIVE_WIDTH_LIMIT && !spec.allow_huge {
        return Err(Error::HugeSweep(spec.width));
    }
    Ok(())
}

/// Runs the sweep on the parallel backend when the `parallel` feature is
/// enabled (rayon's current pool decides the worker count), otherwise on
/// the serial backend. Both produce bit-identical reports.
pub fn sweep(design: Design, spec: &SweepSpec) -> Result<ErrorReport> {
    let mul = design.multiplier(spec.width, spec.n_ref)?;
    match spec.mode {
        SweepMode::Sampled { count, seed } => {
            Ok(sampled_accum(&mul, spec, count, seed).report(design, spec))
        }
        SweepMode::Exhaustive => {
            check_exhaustive(spec)?;
            let total = exhaustive_accum(&mul, spec.width);
            Ok(total.report(design, spec))
        }
    }
}

/// Serial-backend sweep, compiled unconditionally so the two backends can
/// be compared on the same build.
pub fn sweep_serial(design: Design, spec: &SweepSpec) -> Result<ErrorReport> {
    let mul = design.multiplier(spec.width, spec.n_ref)?;
    match spec.mode {
        SweepMode::Sampled { count, seed } => {
            Ok(sampled_accum(&mul, spec, count, seed).report(design, spec))
        }
        SweepMode::Exhaustive => {
            check_exhaustive(spec)?;
            let total = exhaustive_accum_serial(&mul, spec.width);
            Ok(total.report(design, spec))
        }
    }
}

#[cfg(feature = "parallel")]
fn exhaustive_accum(mul: &Multiplier, width: u32) -> Accum {
    let rows: Vec<Accum> = (0..1u64 << width)
        .into_par_iter()
        .map(|a| row_accum(mul, a, width))
        .collect();
    let mut total = Accum::default();
    for row in &rows {
        total.merge(row);
    }
    total
}

#[cfg(not(feature = "parallel"))]
fn exhaustive_accum(mul: &Multiplier, width: u32) -> Accum {
    exhaustive_accum_serial(mul, width)
}

fn exhaustive_accum_serial(mul: &Multiplier, width: u32) -> Accum {
    let mut total = Accum::default();
    for a in 0..1u64 << width {
        let row = row_accum(mul, a, width);
        total.merge(&row);
    }
    total
}

fn sampled_accum(mul: &Multiplier, spec: &SweepSpec, count: u64, seed: u64) -> Accum {
    let mut sampler = PairSampler::new(seed, spec.width);
    let mut acc = Accum::default();
    for _ in 0..count {
        let (a, b) = sampler.next_pair();
        acc.add(a * b, mul.mul(a, b));
    }
    acc
}

/// Per-`a` mean absolute relative error, for the binned error-grid output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub a: u64,
    pub mean_ared_percent: f64,
    pub count: u64,
}

/// Walks the full `width`-bit grid in row-major order, handing every
/// non-excluded pair to `on_pair(a, b, ared_percent)` and returning the
/// per-`a` row means. Rows with no valid pair (`a = 0`) are omitted.
///
/// Limited to `width <= 12`: the raw stream is one record per pair.
pub fn error_grid(
    design: Design,
    width: u32,
    n_ref: u32,
    mut on_pair: impl FnMut(u64, u64, f64),
) -> Result<Vec<GridRow>> {
    if width > GRID_WIDTH_LIMIT {
        return Err(Error::InvalidParams(format!(
            "error grid limited to width <= {GRID_WIDTH_LIMIT}, got {width}"
        )));
    }
    let mul = design.multiplier(width, n_ref)?;
    let mut rows = Vec::new();
    for a in 0..1u64 << width {
        let mut sum = 0.0f64;
        let mut count = 0u64;
        for b in 0..1u64 << width {
            let exact = a * b;
            if exact == 0 {
                continue;
            }
            let ared = ((mul.mul(a, b) as i128 - exact as i128) as f64 / exact as f64).abs();
            on_pair(a, b, 100.0 * ared);
            sum += ared;
            count += 1;
        }
        if count > 0 {
            rows.push(GridRow {
                a,
                mean_ared_percent: 100.0 * sum / count as f64,
                count,
            });
        }
    }
    Ok(rows)
}
