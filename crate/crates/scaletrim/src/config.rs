//! Serializable multiplier configuration.
//!
//! A [`ScaleTrimConfig`] is everything the runtime needs: truncation width,
//! segment count, exponent, and the quantized table, plus the calibration
//! metadata (`alpha`, `n_ref`) that produced them. The JSON schema is flat:
//!
//! ```json
//! { "h": 3, "m": 4, "delta_ee": -2, "n_ref": 8,
//!   "alpha": "1.4294720818014706", "lut": [21, 15, 50, 113] }
//! ```
//!
//! `alpha` travels as a decimal string: Rust's float formatting is
//! shortest-round-trip, so `parse(to_string(x)) == x` exactly, and a string
//! sidesteps any JSON-number precision mangling by other tooling.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibrate::{self, FitParams};
use crate::compensate::{self, CompTable, FRAC_LUT};
use crate::{Error, Result};

/// Complete description of one scaleTRIM(h, M) instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTrimConfig {
    pub h: u32,
    pub m: u32,
    pub delta_ee: i32,
    pub n_ref: u32,
    #[serde(with = "alpha_string")]
    pub alpha: f64,
    pub lut: Vec<i32>,
}

mod alpha_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse()
            .map_err(|_| de::Error::custom(format!("invalid alpha string {raw:?}")))
    }
}

impl ScaleTrimConfig {
    /// Run the full offline pipeline (fit, exponent, table) for `(h, m)` on
    /// the exhaustive `n_ref` grid.
    pub fn calibrated(h: u32, m: u32, n_ref: u32) -> Result<Self> {
        let fp = calibrate::calibrate(h, n_ref)?;
        let table = compensate::build_table(&fp, m, n_ref)?;
        Ok(ScaleTrimConfig {
            h,
            m,
            delta_ee: fp.delta_ee,
            n_ref,
            alpha: fp.alpha,
            lut: table.entries,
        })
    }

    /// Internal consistency checks; run after deserializing foreign input.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            if !self.lut.is_empty() {
                return Err(Error::InvalidParams("m = 0 requires an empty lut".into()));
            }
        } else {
            if !self.m.is_power_of_two() || self.m < 4 || self.m.ilog2() > self.h + 1 {
                return Err(Error::InvalidSegments {
                    m: self.m,
                    h: self.h,
                });
            }
            if self.lut.len() != self.m as usize {
                return Err(Error::InvalidParams(format!(
                    "lut has {} entries, expected m = {}",
                    self.lut.len(),
                    self.m
                )));
            }
        }
        if self.delta_ee >= 0 || self.delta_ee < -16 {
            return Err(Error::InvalidParams(format!(
                "delta_ee {} out of range",
                self.delta_ee
            )));
        }
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if self.lut.iter().any(|&c| c.unsigned_abs() >= 1 << FRAC_LUT) {
            return Err(Error::InvalidParams("|C_i| must be < 1".into()));
        }
        Ok(())
    }

    /// The calibration metadata as [`FitParams`] (residual recomputable on
    /// demand; it is intentionally not serialized).
    pub fn fit_params(&self) -> FitParams {
        FitParams {
            h: self.h,
            n_ref: self.n_ref,
            alpha: self.alpha,
            delta_ee: self.delta_ee,
            residual_mse: f64::NAN,
        }
    }

    /// The compensation table view of `lut`.
    pub fn comp_table(&self) -> CompTable {
        CompTable {
            h: self.h,
            m: self.m,
            entries: self.lut.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ScaleTrimConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the compact canonical JSON encoding; embedded in emitted
    /// artifacts so every report can be traced to its exact configuration.
    pub fn sha256_hex(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
