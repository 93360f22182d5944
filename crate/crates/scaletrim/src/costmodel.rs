//! First-order hardware cost proxy for the truncation multiplier.
//!
//! Unit-weight model: an adder of width `w` costs `w` area and `w` delay; a
//! `w`-bit barrel shifter costs `w*ceil(log2 w)` area and `ceil(log2 w)`
//! delay; a leading-one detector over `N` bits costs `N` area and
//! `ceil(log2 N)` delay; an `M`-way constant mux costs `10*M` area and
//! `ceil(log2 M)` delay. Energy is modeled as `area * delay`.
//!
//! These are *relative* figures for comparing parameter points of the same
//! pipeline — they reproduce orderings and growth trends, not absolute
//! synthesis results (no technology mapping, wiring, or clocking is
//! modeled). Cross-architecture area/power claims are out of scope.

use serde::{Deserialize, Serialize};

use crate::{compensate, Error, Result};

/// One pipeline stage's contribution to the totals.
///
/// `area` is the total over all `count` instances. `delay` is the stage's
/// contribution to the modeled critical path: operand-side duplicates work
/// in parallel and contribute one unit delay, while chained instances (the
/// accumulation adders) contribute once per instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCost {
    pub name: String,
    pub count: u32,
    pub area: u64,
    pub delay: u64,
}

/// Modeled cost of one `scaletrim(h, m)` datapath at a given width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub width: u32,
    pub h: u32,
    pub m: u32,
    pub blocks: Vec<BlockCost>,
    pub area: u64,
    pub delay: u64,
    pub energy: u64,
}

fn ceil_log2(w: u64) -> u64 {
    debug_assert!(w >= 1);
    (64 - (w - 1).leading_zeros()) as u64
}

/// Estimates the datapath cost for truncation width `h`, segment count `m`
/// (0 disables the compensation mux) and the calibrated scale exponent
/// `delta_ee`, for `width`-bit operands.
pub fn estimate(h: u32, m: u32, delta_ee: i32, width: u32) -> Result<CostEstimate> {
    if !(crate::mantissa::MIN_WIDTH..=crate::mantissa::MAX_WIDTH).contains(&width) {
        return Err(Error::InvalidWidth(width));
    }
    if h < 2 || h > width - 1 {
        return Err(Error::InvalidTruncation {
            h,
            limit: width - 1,
        });
    }
    if delta_ee >= 0 {
        return Err(Error::InvalidParams(format!(
            "scale exponent {delta_ee} must be negative"
        )));
    }
    compensate::check_m(m, h)?;

    let n = width as u64;
    let e = (-delta_ee) as u32;
    let f = (h + e).max(8) as u64;

    let mut blocks = Vec::new();
    let mut push = |name: &str, count: u32, area: u64, delay: u64| {
        blocks.push(BlockCost {
            name: name.to_string(),
            count,
            area,
            delay,
        });
    };
    push("leading-one detector", 2, 2 * n, ceil_log2(n));
    push(
        "normalization shifter",
        2,
        2 * (n - 1) * ceil_log2(n - 1),
        ceil_log2(n - 1),
    );
    push("mantissa sum adder", 1, (h + 1) as u64, (h + 1) as u64);
    if m > 0 {
        push("compensation mux", 1, 10 * m as u64, ceil_log2(m as u64));
    }
    push("accumulation adder", 2, 2 * (f + 2), 2 * (f + 2));
    push("exponent adder", 1, ceil_log2(n) + 1, ceil_log2(n) + 1);
    push(
        "result shifter",
        1,
        2 * n * ceil_log2(2 * n),
        ceil_log2(2 * n),
    );

    let area: u64 = blocks.iter().map(|b| b.area).sum();
    let delay: u64 = blocks.iter().map(|b| b.delay).sum();
    Ok(CostEstimate {
        width,
        h,
        m,
        blocks,
        area,
        delay,
        energy: area * delay,
    })
}

/// One candidate in an error/cost trade-off study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub design: String,
    pub h: u32,
    pub m: u32,
    pub mared_percent: f64,
    pub area: u64,
    pub delay: u64,
    pub energy: u64,
}

/// Returns the indices of the non-dominated points (minimizing both
/// `mared_percent` and `energy`), sorted by energy ascending with error as
/// the tie-break. Brute-force over all pairs; candidate sets here are tiny.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<usize> {
    let dominates = |p: &ParetoPoint, q: &ParetoPoint| {
        p.mared_percent <= q.mared_percent
            && p.energy <= q.energy
            && (p.mared_percent < q.mared_percent || p.energy < q.energy)
    };
    let mut front: Vec<usize> = (0..points.len())
        .filter(|&i| {
            points
                .iter()
                .enumerate()
                .all(|(j, q)| j == i || !dominates(q, &points[i]))
        })
        .collect();
    front.sort_by(|&i, &j| {
        (points[i].energy, points[i].mared_percent)
            .partial_cmp(&(points[j].energy, points[j].mared_percent))
            .unwrap()
            .then(i.cmp(&j))
    });
    front
}
