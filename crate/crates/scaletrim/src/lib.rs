//! Bit-exact behavioral model and analysis toolkit for truncation-based
//! approximate integer multipliers.
//!
//! The centerpiece is the scaleTRIM(h, M) multiplier: operands are
//! normalized to `2^n · (1 + X)`, mantissas are truncated to `h` bits, the
//! product term is linearized as `alpha · (X_h + Y_h)` with `alpha − 1`
//! rounded down to a power of two `2^delta_ee`, and a piecewise-constant
//! M-entry compensation table corrects the residual error. Calibration
//! (`calibrate`, `compensate`) runs offline in real arithmetic and emits a
//! fully quantized [`ScaleTrimConfig`]; the runtime datapath (`datapath`)
//! is integer-only and bit-reproducible.
//!
//! Around the core sit reference baselines (`baselines`), exhaustive and
//! sampled error analytics (`metrics`), a proxy hardware cost model with
//! Pareto extraction (`costmodel`), and a small quantized-inference harness
//! with a pluggable scalar multiplier (`nn`).
//!
//! With the default `parallel` feature, sweeps and calibration distribute
//! across a rayon pool; results are bit-identical to the always-available
//! serial paths because partial results are merged in a fixed order.

pub mod baselines;
pub mod calibrate;
pub mod compensate;
pub mod config;
pub mod costmodel;
pub mod datapath;
pub mod design;
pub mod mantissa;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod rng;

pub use config::ScaleTrimConfig;
pub use design::{Design, Multiplier};
pub use metrics::{ErrorReport, SweepMode, SweepSpec};

/// Unified error type for fallible operations across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("operand width {0} outside supported range [{min}..={max}]", min = mantissa::MIN_WIDTH, max = mantissa::MAX_WIDTH)]
    InvalidWidth(u32),
    #[error("truncation width h={h} invalid: must satisfy 2 <= h <= {limit}")]
    InvalidTruncation { h: u32, limit: u32 },
    #[error(
        "reference resolution n_ref={0} invalid: must satisfy 3 <= n_ref <= 14 and h <= n_ref-1"
    )]
    InvalidNRef(u32),
    #[error(
        "segment count m={m} invalid for h={h}: need 0, or a power of two with 4 <= m <= 2^(h+1)"
    )]
    InvalidSegments { m: u32, h: u32 },
    #[error("fitted slope alpha={0} outside the open interval (1, 2)")]
    AlphaOutOfRange(f64),
    #[error("cannot parse design string {0:?}: expected scaletrim:<h>,<m> | drum:<m> | dsm:<m> | tosam:<t>,<h> | exact | pow2")]
    InvalidDesign(String),
    #[error("design parameters out of range: {0}")]
    InvalidParams(String),
    #[error("exhaustive sweep at width {0} requires the allow_huge flag (2^{} pairs)", 2 * .0)]
    HugeSweep(u32),
    #[error("malformed fixture: {0}")]
    Fixture(String),
    #[error("malformed hex table entry {0:?}")]
    BadHexEntry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Install a global rayon pool with `jobs` threads; `None` keeps the
/// default (one thread per logical CPU). Without the `parallel` feature
/// this is a no-op — everything runs serially anyway. Calling it twice is
/// harmless: rayon keeps the first global pool.
pub fn configure_jobs(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}
