//! Fixed-point inference harness: measures how swapping the multiplier
//! affects a small quantized classifier.
//!
//! The network is a plain dense stack with `i8` weights, `i32` biases and
//! `u8` activations. Products accumulate in `i64` (asserted to stay inside
//! `i32`), each layer applies an arithmetic right shift, and hidden layers
//! clamp to `0..=255`. Everything is integer, so a run is bit-deterministic
//! for any multiplier model.
//!
//! Fixture format: a JSON sidecar (`format: "scaletrim-quantnet/v1"`)
//! listing layer shapes/shifts next to a flat binary with, per layer, the
//! row-major `i8` weights (`[out][in]`) followed by the little-endian `i32`
//! biases. Inputs are flat `u8` vectors, one sample per `in_dim` bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::design::Multiplier;
use crate::{Error, Result};

pub const FIXTURE_FORMAT: &str = "scaletrim-quantnet/v1";

/// One dense layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `[out_dim][in_dim]`.
    pub weights: Vec<i8>,
    pub biases: Vec<i32>,
    /// Arithmetic right shift applied to each accumulated sum.
    pub shift: u32,
    /// Hidden layers clamp to `0..=255`; the final layer keeps raw logits.
    pub relu: bool,
}

/// A dense stack ready for inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantNet {
    pub layers: Vec<DenseLayer>,
}

#[derive(Serialize, Deserialize)]
struct LayerMeta {
    in_dim: usize,
    out_dim: usize,
    shift: u32,
    relu: bool,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    weights_file: String,
    layers: Vec<LayerMeta>,
}

impl QuantNet {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    /// Runs one sample through the stack using `mul` for every
    /// weight-times-activation product (sign handled outside the
    /// multiplier), returning the final-layer logits.
    pub fn infer(&self, input: &[u8], mul: &Multiplier) -> Result<Vec<i32>> {
        self.run(input, |w, a| {
            let p = mul.mul(w.unsigned_abs() as u64, a as u64) as i64;
            if w < 0 {
                -p
            } else {
                p
            }
        })
    }

    /// Plain integer inference, the bit-exact reference.
    pub fn infer_reference(&self, input: &[u8]) -> Result<Vec<i32>> {
        self.run(input, |w, a| w as i64 * a as i64)
    }

    fn run(&self, input: &[u8], mut product: impl FnMut(i8, u8) -> i64) -> Result<Vec<i32>> {
        if input.len() != self.input_dim() {
            return Err(Error::Fixture(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut act: Vec<u8> = input.to_vec();
        let mut logits = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            if !layer.relu && li + 1 != self.layers.len() {
                return Err(Error::Fixture(
                    "only the final layer may emit raw logits".into(),
                ));
            }
            let mut next = Vec::with_capacity(layer.out_dim);
            logits.clear();
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut acc: i64 = layer.biases[o] as i64;
                for (w, a) in row.iter().zip(&act) {
                    acc += product(*w, *a);
                }
                assert!(
                    i32::try_from(acc).is_ok(),
                    "accumulator {acc} leaves the 32-bit envelope; fixture shifts are miscalibrated"
                );
                let shifted = acc >> layer.shift;
                if layer.relu {
                    next.push(shifted.clamp(0, 255) as u8);
                } else {
                    logits.push(shifted as i32);
                }
            }
            act = next;
        }
        Ok(logits)
    }
}

/// Index of the largest logit; ties go to the first maximum.
pub fn argmax(logits: &[i32]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// How closely an approximate multiplier tracks exact inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub samples: u64,
    pub top1_agreement_percent: f64,
    pub max_logit_abs_diff: u64,
    pub mean_logit_abs_diff: f64,
}

/// Runs every sample through the reference path and through `mul`,
/// comparing predicted classes and raw logits.
pub fn compare(net: &QuantNet, inputs: &[Vec<u8>], mul: &Multiplier) -> Result<AgreementReport> {
    let mut agree = 0u64;
    let mut max_diff = 0u64;
    let mut sum_diff = 0.0f64;
    let mut logit_count = 0u64;
    for input in inputs {
        let exact = net.infer_reference(input)?;
        let approx = net.infer(input, mul)?;
        if argmax(&exact) == argmax(&approx) {
            agree += 1;
        }
        for (e, a) in exact.iter().zip(&approx) {
            let d = e.abs_diff(*a) as u64;
            max_diff = max_diff.max(d);
            sum_diff += d as f64;
            logit_count += 1;
        }
    }
    Ok(AgreementReport {
        samples: inputs.len() as u64,
        top1_agreement_percent: 100.0 * agree as f64 / inputs.len() as f64,
        max_logit_abs_diff: max_diff,
        mean_logit_abs_diff: sum_diff / logit_count as f64,
    })
}

/// Loads a network from its JSON sidecar; the weights file is resolved
/// relative to the sidecar's directory.
pub fn load_net(json_path: &Path) -> Result<QuantNet> {
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    if sidecar.format != FIXTURE_FORMAT {
        return Err(Error::Fixture(format!(
            "unsupported fixture format {:?} (want {FIXTURE_FORMAT:?})",
            sidecar.format
        )));
    }
    let bin_path = json_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&sidecar.weights_file);
    let bin = fs::read(&bin_path)?;
    let expected: usize = sidecar
        .layers
        .iter()
        .map(|l| l.out_dim * l.in_dim + 4 * l.out_dim)
        .sum();
    if bin.len() != expected {
        return Err(Error::Fixture(format!(
            "weights file {} has {} bytes, sidecar implies {expected}",
            bin_path.display(),
            bin.len()
        )));
    }
    let mut off = 0;
    let mut layers = Vec::new();
    for meta in &sidecar.layers {
        let wlen = meta.out_dim * meta.in_dim;
        let weights: Vec<i8> = bin[off..off + wlen].iter().map(|&b| b as i8).collect();
        off += wlen;
        let biases: Vec<i32> = bin[off..off + 4 * meta.out_dim]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        off += 4 * meta.out_dim;
        layers.push(DenseLayer {
            in_dim: meta.in_dim,
            out_dim: meta.out_dim,
            weights,
            biases,
            shift: meta.shift,
            relu: meta.relu,
        });
    }
    Ok(QuantNet { layers })
}

/// Writes `net.json` + the weights binary into `dir`.
pub fn save_net(net: &QuantNet, dir: &Path, weights_file: &str) -> Result<PathBuf> {
    let sidecar = Sidecar {
        format: FIXTURE_FORMAT.to_string(),
        weights_file: weights_file.to_string(),
        layers: net
            .layers
            .iter()
            .map(|l| LayerMeta {
                in_dim: l.in_dim,
                out_dim: l.out_dim,
                shift: l.shift,
                relu: l.relu,
            })
            .collect(),
    };
    let mut bin = Vec::new();
    for l in &net.layers {
        bin.extend(l.weights.iter().map(|&w| w as u8));
        for b in &l.biases {
            bin.extend_from_slice(&b.to_le_bytes());
        }
    }
    fs::write(dir.join(weights_file), bin)?;
    let json_path = dir.join("net.json");
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(json_path)
}

/// Loads a flat `u8` input file; the length must be a whole number of
/// `in_dim`-byte samples.
pub fn load_inputs(path: &Path, in_dim: usize) -> Result<Vec<Vec<u8>>> {
    let raw = fs::read(path)?;
    if in_dim == 0 || raw.len() % in_dim != 0 {
        return Err(Error::Fixture(format!(
            "input file {} has {} bytes, not a multiple of sample size {in_dim}",
            path.display(),
            raw.len()
        )));
    }
    Ok(raw.chunks_exact(in_dim).map(|c| c.to_vec()).collect())
}

/// Generates the standard test fixture into `dir`: a seeded 64->48->32->10
/// stack (`net.json` + `net.bin`) and 1000 seeded input samples
/// (`inputs.bin`). Layer shifts are derived from the reference path so
/// every hidden pre-activation fits the `u8` range after shifting; the
/// final layer keeps raw logits (shift 0).
pub fn gen_fixture(seed: u64, dir: &Path) -> Result<PathBuf> {
    const DIMS: [usize; 4] = [64, 48, 32, 10];
    const SAMPLES: usize = 1000;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut layers = Vec::new();
    for w in DIMS.windows(2) {
        let (in_dim, out_dim) = (w[0], w[1]);
        let weights: Vec<i8> = (0..in_dim * out_dim)
            .map(|_| (rng.next_u32() & 0xFF) as u8 as i8)
            .collect();
        let biases: Vec<i32> = (0..out_dim)
            .map(|_| (rng.next_u32() & 0x3FF) as i32 - 512)
            .collect();
        let relu = out_dim != *DIMS.last().unwrap();
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            weights,
            biases,
            shift: 0,
            relu,
        });
    }

    let inputs: Vec<Vec<u8>> = (0..SAMPLES)
        .map(|_| {
            (0..DIMS[0])
                .map(|_| (rng.next_u32() & 0xFF) as u8)
                .collect()
        })
        .collect();

    // Calibrate the shifts layer by layer on the reference path: propagate
    // all samples, find the largest biased sum, and shift until it fits.
    let mut acts: Vec<Vec<u8>> = inputs.clone();
    for layer in &mut layers {
        let mut max_pre: i64 = 0;
        let mut pres: Vec<Vec<i64>> = Vec::with_capacity(acts.len());
        for act in &acts {
            let mut row_pres = Vec::with_capacity(layer.out_dim);
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut acc = layer.biases[o] as i64;
                for (w, a) in row.iter().zip(act) {
                    acc += *w as i64 * *a as i64;
                }
                max_pre = max_pre.max(acc);
                row_pres.push(acc);
            }
            pres.push(row_pres);
        }
        let mut shift = 0u32;
        if layer.relu {
            while (max_pre >> shift) > 255 {
                shift += 1;
            }
        }
        layer.shift = shift;
        acts = pres
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&p| (p >> shift).clamp(0, 255) as u8)
                    .collect()
            })
            .collect();
    }

    let net = QuantNet { layers };
    let mut flat = Vec::with_capacity(SAMPLES * DIMS[0]);
    for s in &inputs {
        flat.extend_from_slice(s);
    }
    fs::write(dir.join("inputs.bin"), flat)?;
    save_net(&net, dir, "net.bin")
}
