//! Acceptance suite: the nine guarantees this toolkit makes, one test per
//! criterion. Each prints a single `acceptance N (<name>): PASS|FAIL` line
//! (visible with `--nocapture`); a FAIL also fails the test.
//!
//! Numbers asserted here are frozen measurements of this implementation on
//! the standard 8-bit calibration grid; they double as regression pins.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use scaletrim::costmodel::{self, ParetoPoint};
use scaletrim::metrics::{self, SweepSpec};
use scaletrim::{calibrate, compensate, mantissa, nn};
use scaletrim::{Design, ErrorReport, ScaleTrimConfig};
use serde::{Deserialize, Serialize};

fn criterion(n: u32, name: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("acceptance {n} ({name}): PASS"),
        Err(cause) => {
            println!("acceptance {n} ({name}): FAIL");
            std::panic::resume_unwind(cause);
        }
    }
}

fn sweep8(design: &str) -> ErrorReport {
    metrics::sweep(design.parse().unwrap(), &SweepSpec::exhaustive(8)).unwrap()
}

#[test]
fn c1_calibration_point() {
    criterion(1, "calibration of h=3 on the 8-bit grid", || {
        let t = Instant::now();
        let fit = calibrate::fit_alpha(3, 8).unwrap();
        let rounded = calibrate::calibrate(3, 8).unwrap();
        let elapsed = t.elapsed();
        assert!(
            (1.357..=1.457).contains(&fit.alpha),
            "fitted slope {} outside the expected window",
            fit.alpha
        );
        assert_eq!(rounded.delta_ee, -2, "slope must round down to 2^-2");
        assert!(
            elapsed < Duration::from_secs(1),
            "calibration took {elapsed:?}, budget 1s"
        );
    });
}

#[test]
fn c2_exhaustive_8bit_error() {
    criterion(2, "exhaustive 8-bit error of scaletrim:3,4", || {
        let t = Instant::now();
        let r = sweep8("scaletrim:3,4");
        let elapsed = t.elapsed();
        assert!(
            (r.mared_percent - 3.73).abs() <= 0.5,
            "MARED {}% outside 3.73% +/- 0.5pp",
            r.mared_percent
        );
        assert_eq!((r.pairs_included, r.pairs_excluded), (65025, 511));
        assert!(
            elapsed < Duration::from_secs(5),
            "sweep took {elapsed:?}, budget 5s"
        );
    });
}

#[test]
fn c3_baseline_ordering() {
    criterion(
        3,
        "error ordering against truncate-and-round baselines",
        || {
            let st34 = sweep8("scaletrim:3,4");
            let t13 = sweep8("tosam:1,3");
            assert!(
                st34.mared_percent < t13.mared_percent,
                "scaletrim:3,4 ({}) must beat tosam:1,3 ({})",
                st34.mared_percent,
                t13.mared_percent
            );
            assert!(
                (t13.mared_percent - 5.76).abs() <= 1.0,
                "tosam:1,3 MARED {}% outside 5.76% +/- 1.0pp",
                t13.mared_percent
            );

            let st48 = sweep8("scaletrim:4,8");
            let t14 = sweep8("tosam:1,4");
            let imp_mared = 100.0 * (t14.mared_percent - st48.mared_percent) / t14.mared_percent;
            let imp_std =
                100.0 * (t14.stdared_percent - st48.stdared_percent) / t14.stdared_percent;
            assert!(
                (imp_mared - 25.0).abs() <= 10.0,
                "MARED improvement {imp_mared}% outside 25% +/- 10pp"
            );
            assert!(
                (imp_std - 30.0).abs() <= 10.0,
                "StdARED improvement {imp_std}% outside 30% +/- 10pp"
            );
        },
    );
}

#[test]
fn c4_structural_invariants() {
    criterion(
        4,
        "power-of-two exactness, zero absorption, commutativity",
        || {
            // Without compensation the pipeline is exact on 2^i * 2^j: both
            // truncated mantissas are zero, so only the exponent path acts.
            for h in [3u32, 4, 5] {
                let k = Design::ScaleTrim { h, m: 0 }.multiplier(8, 8).unwrap();
                for i in 0..8 {
                    for j in 0..8 {
                        assert_eq!(
                            k.mul(1 << i, 1 << j),
                            1u64 << (i + j),
                            "h={h} 2^{i} * 2^{j}"
                        );
                    }
                }
            }

            let designs = [
                "scaletrim:3,0",
                "scaletrim:3,4",
                "scaletrim:4,8",
                "scaletrim:5,8",
                "drum:4",
                "dsm:4",
                "tosam:0,3",
                "tosam:1,4",
                "pow2",
                "exact",
            ];
            for name in designs {
                let mul = name.parse::<Design>().unwrap().multiplier(8, 8).unwrap();
                for v in 0..256u64 {
                    assert_eq!(mul.mul(v, 0), 0, "{name}: {v} * 0");
                    assert_eq!(mul.mul(0, v), 0, "{name}: 0 * {v}");
                }
                for a in 0..256u64 {
                    for b in a..256u64 {
                        assert_eq!(mul.mul(a, b), mul.mul(b, a), "{name}: {a} vs {b}");
                    }
                }
            }
        },
    );
}

/// Real-valued pipeline evaluated in exact rational arithmetic: the scale
/// factor is `1 + 2^delta_ee`, the table entry contributes at 8 fractional
/// bits, the result is the floor of the rescaled value, never negative.
fn rational_pipeline(cfg: &ScaleTrimConfig, width: u32, a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    let na = mantissa::normalize(a, width);
    let nb = mantissa::normalize(b, width);
    let k = mantissa::truncate(&na, cfg.h) + mantissa::truncate(&nb, cfg.h);
    let e = (-cfg.delta_ee) as u32;
    let frac =
        |num: i64, bits: u32| BigRational::new(BigInt::from(num), BigInt::one() << bits as usize);

    let mut r = BigRational::one();
    r += frac(k as i64, cfg.h);
    r += frac(k as i64, cfg.h + e);
    if cfg.m > 0 {
        let c = cfg.lut[compensate::segment_index(k, cfg.h, cfg.m)];
        r += frac(c as i64, compensate::FRAC_LUT);
    }
    if r.is_negative() {
        r = BigRational::zero();
    }
    let scaled = r * BigRational::from(BigInt::one() << (na.lod + nb.lod) as usize);
    scaled
        .floor()
        .to_integer()
        .to_u64()
        .expect("non-negative product")
}

#[test]
fn c5_integer_datapath_matches_rational_oracle() {
    criterion(
        5,
        "integer datapath == rational oracle on all 8-bit pairs",
        || {
            for (h, m) in [(3u32, 4u32), (4, 8)] {
                let cfg = ScaleTrimConfig::calibrated(h, m, 8).unwrap();
                let kernel = scaletrim::datapath::ScaleTrimKernel::new(&cfg, 8).unwrap();
                for a in 0..256u64 {
                    for b in 0..256u64 {
                        let want = rational_pipeline(&cfg, 8, a, b);
                        let got = kernel.mul(a, b);
                        assert_eq!(got, want, "h={h} m={m}: {a} * {b}");
                    }
                }
            }
        },
    );
}

#[test]
fn c6_compensation_reduces_grid_error() {
    criterion(6, "compensation table lowers calibration-grid MSE", || {
        for h in [3u32, 4, 5] {
            let fit = calibrate::calibrate(h, 8).unwrap();
            let without = compensate::grid_mse(h, fit.delta_ee, None, 8);
            for m in [4u32, 8] {
                let table = compensate::build_table(&fit, m, 8).unwrap();
                let with = compensate::grid_mse(h, fit.delta_ee, Some(&table), 8);
                // Slack of 2^-8 covers table quantization to 8 fractional
                // bits; in practice the reduction is far larger.
                assert!(
                    with <= without + f64::exp2(-8.0),
                    "h={h} m={m}: MSE with table {with} vs without {without}"
                );
            }
        }
    });
}

#[test]
fn c7_scalability_and_determinism() {
    criterion(
        7,
        "16-bit exhaustive sweep: budget, determinism, sampling",
        || {
            let design: Design = "scaletrim:4,4".parse().unwrap();

            // Worker-count independence, checked at 12 bits (16.8M pairs).
            let spec12 = SweepSpec::exhaustive(12);
            let serial = metrics::sweep_serial(design, &spec12).unwrap();
            for threads in [1usize, 3] {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap();
                let r = pool.install(|| metrics::sweep(design, &spec12)).unwrap();
                assert_eq!(r, serial, "{threads}-worker sweep differs from serial");
            }

            // Full 16-bit space: 2^32 products inside the time budget.
            let t = Instant::now();
            let spec16 = SweepSpec {
                allow_huge: true,
                ..SweepSpec::exhaustive(16)
            };
            let exhaustive = metrics::sweep(design, &spec16).unwrap();
            let elapsed = t.elapsed();
            assert_eq!(exhaustive.pairs_included, (1u64 << 32) - (1 << 17) + 1);
            assert!(
                elapsed < Duration::from_secs(600),
                "16-bit sweep took {elapsed:?}, budget 600s"
            );

            // A 100k seeded sample estimates the exhaustive mean to within
            // three standard errors.
            let sampled = metrics::sweep(design, &SweepSpec::sampled(16, 100_000, 42)).unwrap();
            let se = exhaustive.stdared_percent / (sampled.pairs_included as f64).sqrt();
            let dev = (sampled.mared_percent - exhaustive.mared_percent).abs();
            assert!(
                dev <= 3.0 * se,
                "sampled MARED off by {dev}pp, 3 SE = {}pp",
                3.0 * se
            );
        },
    );
}

#[test]
fn c8_pareto_frontier_verified() {
    criterion(8, "error/energy frontier over h=3..5, m=0,4,8", || {
        let mut points = Vec::new();
        for h in 3u32..=5 {
            for m in [0u32, 4, 8] {
                let cfg = ScaleTrimConfig::calibrated(h, m, 8).unwrap();
                let cost = costmodel::estimate(h, m, cfg.delta_ee, 8).unwrap();
                let report = sweep8(&format!("scaletrim:{h},{m}"));
                points.push(ParetoPoint {
                    design: format!("scaletrim:{h},{m}"),
                    h,
                    m,
                    mared_percent: report.mared_percent,
                    area: cost.area,
                    delay: cost.delay,
                    energy: cost.energy,
                });
            }
        }

        // The modeled cost must grow strictly with either parameter.
        let by = |h: u32, m: u32| points.iter().find(|p| p.h == h && p.m == m).unwrap();
        for m in [0u32, 4, 8] {
            for h in 3..5 {
                assert!(
                    by(h + 1, m).energy > by(h, m).energy,
                    "energy not increasing in h at m={m}"
                );
                assert!(
                    by(h + 1, m).area > by(h, m).area,
                    "area not increasing in h at m={m}"
                );
            }
        }
        for h in 3u32..=5 {
            assert!(by(h, 4).energy > by(h, 0).energy && by(h, 8).energy > by(h, 4).energy);
            assert!(by(h, 4).area > by(h, 0).area && by(h, 8).area > by(h, 4).area);
        }

        // Independent brute-force dominance check of the reported frontier.
        let front = costmodel::pareto_front(&points);
        let dominated = |i: usize| {
            points.iter().enumerate().any(|(j, q)| {
                j != i
                    && q.mared_percent <= points[i].mared_percent
                    && q.energy <= points[i].energy
                    && (q.mared_percent < points[i].mared_percent || q.energy < points[i].energy)
            })
        };
        for (i, p) in points.iter().enumerate() {
            assert_eq!(
                front.contains(&i),
                !dominated(i),
                "frontier membership wrong for {}",
                p.design
            );
        }

        // Endpoints are always on the frontier: cheapest point and most
        // accurate point.
        let min_energy = points
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| p.energy)
            .unwrap()
            .0;
        let min_error = points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.mared_percent.partial_cmp(&b.1.mared_percent).unwrap())
            .unwrap()
            .0;
        assert!(front.contains(&min_energy) && front.contains(&min_error));
        let energies: Vec<u64> = front.iter().map(|&i| points[i].energy).collect();
        assert!(
            energies.windows(2).all(|w| w[0] <= w[1]),
            "frontier not sorted by energy"
        );
    });
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct GoldenAgreement {
    design: String,
    samples: u64,
    top1_agreement_percent: f64,
    max_logit_abs_diff: u64,
    mean_logit_abs_diff: f64,
}

#[test]
fn c9_nn_inference_agreement() {
    criterion(
        9,
        "quantized-net inference: exactness and pinned agreement",
        || {
            let root = Path::new(env!("CARGO_MANIFEST_DIR"));
            let net = nn::load_net(&root.join("fixtures/net.json")).unwrap();
            let inputs =
                nn::load_inputs(&root.join("fixtures/inputs.bin"), net.input_dim()).unwrap();
            assert_eq!(inputs.len(), 1000);

            // With the exact multiplier the harness is bit-identical to plain
            // integer inference on every sample.
            let exact = Design::Exact.multiplier(8, 8).unwrap();
            for input in &inputs {
                assert_eq!(
                    net.infer(input, &exact).unwrap(),
                    net.infer_reference(input).unwrap(),
                    "exact-multiplier inference diverged"
                );
            }

            // The approximate run is deterministic...
            let mul = Design::ScaleTrim { h: 4, m: 4 }.multiplier(8, 8).unwrap();
            let r1 = nn::compare(&net, &inputs, &mul).unwrap();
            let r2 = nn::compare(&net, &inputs, &mul).unwrap();
            assert_eq!(r1, r2, "agreement report must be reproducible");

            // ...and compensation must not hurt: the compensated multiplier
            // tracks the exact logits at least as closely as the uncompensated
            // one on average.
            let bare = Design::ScaleTrim { h: 4, m: 0 }.multiplier(8, 8).unwrap();
            let r0 = nn::compare(&net, &inputs, &bare).unwrap();
            assert!(
                r1.mean_logit_abs_diff <= r0.mean_logit_abs_diff,
                "compensated logits drift more than uncompensated ({} vs {})",
                r1.mean_logit_abs_diff,
                r0.mean_logit_abs_diff
            );

            // Pin the agreement numbers: captured on the first run, any later
            // change is a regression.
            let golden_path = root.join("tests/golden/nn_agreement.json");
            let got = GoldenAgreement {
                design: "scaletrim:4,4".to_string(),
                samples: r1.samples,
                top1_agreement_percent: r1.top1_agreement_percent,
                max_logit_abs_diff: r1.max_logit_abs_diff,
                mean_logit_abs_diff: r1.mean_logit_abs_diff,
            };
            if golden_path.exists() {
                let want: GoldenAgreement =
                    serde_json::from_str(&std::fs::read_to_string(&golden_path).unwrap()).unwrap();
                assert_eq!(got, want, "agreement drifted from the pinned golden");
            } else {
                std::fs::create_dir_all(golden_path.parent().unwrap()).unwrap();
                std::fs::write(&golden_path, serde_json::to_string_pretty(&got).unwrap()).unwrap();
                println!("captured new golden at {}", golden_path.display());
            }
            assert!(
                got.top1_agreement_percent >= 90.0,
                "agreement {high}% implausibly low",
                high = got.top1_agreement_percent
            );
        },
    );
}
