//! Textual design grammar shared by the CLI and the analysis tools.
//!
//! A design names one multiplier and its parameters:
//!
//! ```text
//! scaletrim:<h>,<m> | drum:<m> | dsm:<m> | tosam:<t>,<h> | exact | pow2
//! ```
//!
//! [`Design`] is the parsed name; [`Design::multiplier`] resolves it into a
//! ready-to-evaluate [`Multiplier`] for a given operand width, running
//! calibration and compensation-table construction where needed.

use std::fmt;
use std::str::FromStr;

use crate::datapath::{self, ScaleTrimKernel};
use crate::{baselines, mantissa, Error, Result, ScaleTrimConfig};

/// A parsed design name, independent of operand width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Truncation multiplier with scaling compensation: `scaletrim:<h>,<m>`.
    ScaleTrim { h: u32, m: u32 },
    /// Dynamic-range baseline: `drum:<m>`.
    Drum { m: u32 },
    /// Static-segment baseline: `dsm:<m>`.
    Dsm { m: u32 },
    /// Truncate-and-round baseline: `tosam:<t>,<h>`.
    Tosam { t: u32, h: u32 },
    /// Bit-exact product, the error-metric reference.
    Exact,
    /// Leading-one-only product (both mantissas dropped), the crudest floor.
    Pow2,
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDesign(s.to_string());
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let one =
            |a: Option<&str>| -> Result<u32> { a.and_then(|v| v.parse().ok()).ok_or_else(bad) };
        let two = |a: Option<&str>| -> Result<(u32, u32)> {
            let (x, y) = a.and_then(|v| v.split_once(',')).ok_or_else(bad)?;
            Ok((
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        };
        match name {
            "scaletrim" => {
                let (h, m) = two(args)?;
                Ok(Design::ScaleTrim { h, m })
            }
            "drum" => Ok(Design::Drum { m: one(args)? }),
            "dsm" => Ok(Design::Dsm { m: one(args)? }),
            "tosam" => {
                let (t, h) = two(args)?;
                Ok(Design::Tosam { t, h })
            }
            "exact" if args.is_none() => Ok(Design::Exact),
            "pow2" if args.is_none() => Ok(Design::Pow2),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Design::ScaleTrim { h, m } => write!(f, "scaletrim:{h},{m}"),
            Design::Drum { m } => write!(f, "drum:{m}"),
            Design::Dsm { m } => write!(f, "dsm:{m}"),
            Design::Tosam { t, h } => write!(f, "tosam:{t},{h}"),
            Design::Exact => f.write_str("exact"),
            Design::Pow2 => f.write_str("pow2"),
        }
    }
}

impl Design {
    /// Resolves the design into an evaluator for `width`-bit operands.
    ///
    /// `scaletrim` designs are calibrated on an `n_ref`-bit grid (the
    /// compensation table comes from the same grid); the other designs
    /// ignore `n_ref`. Parameter ranges are checked here so every
    /// [`Multiplier`] is valid by construction.
    pub fn multiplier(self, width: u32, n_ref: u32) -> Result<Multiplier> {
        if !(mantissa::MIN_WIDTH..=mantissa::MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidWidth(width));
        }
        let check_m = |m: u32| {
            if (3..=width).contains(&m) {
                Ok(m)
            } else {
                Err(Error::InvalidParams(format!(
                    "segment size {m} outside 3..={width} for width {width}"
                )))
            }
        };
        match self {
            Design::ScaleTrim { h, m } => {
                let cfg = ScaleTrimConfig::calibrated(h, m, n_ref)?;
                Ok(Multiplier::ScaleTrim(ScaleTrimKernel::new(&cfg, width)?))
            }
            Design::Drum { m } => Ok(Multiplier::Drum { m: check_m(m)? }),
            Design::Dsm { m } => Ok(Multiplier::Dsm { m: check_m(m)? }),
            Design::Tosam { t, h } => {
                if t > 2 {
                    return Err(Error::InvalidParams(format!(
                        "rounding stage width {t} outside 0..=2"
                    )));
                }
                if h < 3 || h > width - 1 || t >= h {
                    return Err(Error::InvalidParams(format!(
                        "kept-field width {h} invalid for width {width} (need 3 <= h <= width-1, t < h)"
                    )));
                }
                Ok(Multiplier::Tosam { t, h, width })
            }
            Design::Exact => Ok(Multiplier::Exact),
            Design::Pow2 => Ok(Multiplier::Pow2 { width }),
        }
    }
}

/// A resolved, ready-to-evaluate multiplier for a fixed operand width.
#[derive(Debug, Clone)]
pub enum Multiplier {
    ScaleTrim(ScaleTrimKernel),
    Drum { m: u32 },
    Dsm { m: u32 },
    Tosam { t: u32, h: u32, width: u32 },
    Exact,
    Pow2 { width: u32 },
}

impl Multiplier {
    /// Evaluates the approximate product of two unsigned operands.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        match *self {
            Multiplier::ScaleTrim(ref k) => k.mul(a, b),
            Multiplier::Drum { m } => baselines::mul_drum(a, b, m),
            Multiplier::Dsm { m } => baselines::mul_dsm(a, b, m),
            Multiplier::Tosam { t, h, width } => baselines::mul_tosam(a, b, width, t, h),
            Multiplier::Exact => datapath::mul_exact(a, b),
            Multiplier::Pow2 { width } => datapath::mul_pow2_trunc(a, b, width),
        }
    }
}
