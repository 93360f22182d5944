//! `scaletrim` — analysis CLI for the truncation-multiplier toolkit.
//!
//! Subcommands cover the full workflow: `calibrate` fits a configuration,
//! `sweep`/`grid` measure error, `pareto` maps the error/cost trade-off,
//! `lut-export` emits the compensation table for RTL consumption,
//! `gen-fixture`/`nn-compare` exercise a quantized network with an
//! approximate multiplier swapped in.
//!
//! Report files (`--out`) are JSON documents with an embedded manifest, or
//! CSV with a `# manifest:` header line when the path ends in `.csv`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use scaletrim::costmodel::{self, ParetoPoint};
use scaletrim::metrics::{self, GridRow};
use scaletrim::nn;
use scaletrim::report::{json_document, percent_cell, RunManifest};
use scaletrim::{compensate, Design, ErrorReport, ScaleTrimConfig, SweepMode, SweepSpec};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "scaletrim",
    version,
    about = "Bit-exact analysis tools for a truncation-based approximate multiplier"
)]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true, env = "TRIMSCALE_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the scale factor and compensation table for one (h, m) point.
    Calibrate {
        /// Kept mantissa bits after truncation.
        #[arg(long)]
        h: u32,
        /// Compensation segments (0 disables the table; otherwise a power
        /// of two between 4 and 2^(h+1)).
        #[arg(long)]
        m: u32,
        /// Calibration grid width in bits.
        #[arg(long, default_value_t = 8)]
        n_ref: u32,
        /// Where to write the configuration JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure relative-error statistics over an operand space.
    Sweep {
        /// Design under test, e.g. `scaletrim:4,8`, `drum:6`, `tosam:1,4`.
        #[arg(long)]
        design: Design,
        /// Operand width in bits.
        #[arg(long)]
        width: u32,
        /// `exhaustive` or `sampled:<count>:seed<seed>`.
        #[arg(long, default_value = "exhaustive")]
        mode: SweepMode,
        /// Calibration grid width for scaletrim designs.
        #[arg(long, default_value_t = 8)]
        n_ref: u32,
        /// Allow exhaustive sweeps beyond 16-bit operands (4^width pairs).
        #[arg(long)]
        allow_huge: bool,
        /// Report file (.json or .csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump per-operand error structure over the full grid (width <= 12).
    Grid {
        #[arg(long)]
        design: Design,
        #[arg(long, default_value_t = 8)]
        width: u32,
        #[arg(long, default_value_t = 8)]
        n_ref: u32,
        /// Binned output: one row per left operand (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Optional raw dump: one row per operand pair (CSV).
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Sweep a parameter grid and report the error/energy Pareto frontier.
    Pareto {
        /// Grid spec, e.g. `h=3..5,m=0,4,8`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 8)]
        width: u32,
        #[arg(long, default_value_t = 8)]
        n_ref: u32,
        /// Report file (.json or .csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a configuration's compensation table as hex words.
    LutExport {
        /// Configuration JSON produced by `calibrate`.
        #[arg(long)]
        config: PathBuf,
        /// Output file: one 10-bit two's-complement word per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare approximate vs exact inference on a quantized network.
    NnCompare {
        /// Network sidecar JSON (with its weights file alongside).
        #[arg(long)]
        net: PathBuf,
        /// Flat u8 input samples, one per `in_dim` bytes.
        #[arg(long)]
        inputs: PathBuf,
        /// Design used for every weight-activation product.
        #[arg(long)]
        design: Design,
        #[arg(long, default_value_t = 8)]
        n_ref: u32,
        /// Report file (.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the seeded quantized-network fixture (net + inputs).
    GenFixture {
        #[arg(long, default_value_t = 20260814)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    scaletrim::configure_jobs(cli.jobs);
    match cli.cmd {
        Cmd::Calibrate { h, m, n_ref, out } => cmd_calibrate(h, m, n_ref, &out),
        Cmd::Sweep {
            design,
            width,
            mode,
            n_ref,
            allow_huge,
            out,
        } => cmd_sweep(design, width, mode, n_ref, allow_huge, out.as_deref()),
        Cmd::Grid {
            design,
            width,
            n_ref,
            out,
            raw,
        } => cmd_grid(design, width, n_ref, &out, raw.as_deref()),
        Cmd::Pareto {
            grid,
            width,
            n_ref,
            out,
        } => cmd_pareto(&grid, width, n_ref, out.as_deref()),
        Cmd::LutExport { config, out } => cmd_lut_export(&config, &out),
        Cmd::NnCompare {
            net,
            inputs,
            design,
            n_ref,
            out,
        } => cmd_nn_compare(&net, &inputs, design, n_ref, out.as_deref()),
        Cmd::GenFixture { seed, out_dir } => cmd_gen_fixture(seed, &out_dir),
    }
}

fn cmd_calibrate(h: u32, m: u32, n_ref: u32, out: &Path) -> Result<()> {
    let cfg = ScaleTrimConfig::calibrated(h, m, n_ref)
        .with_context(|| format!("calibrating h={h} m={m} on a {n_ref}-bit grid"))?;
    fs::write(out, cfg.to_json_pretty())?;
    println!(
        "calibrated h={h} m={m} n_ref={n_ref}: alpha={} delta_ee={} ({} table entries) -> {}",
        cfg.alpha,
        cfg.delta_ee,
        cfg.lut.len(),
        out.display()
    );
    Ok(())
}

fn sweep_manifest(design: Design, width: u32, mode: SweepMode, n_ref: u32) -> RunManifest {
    RunManifest::new("sweep")
        .param("design", design)
        .param("width", width)
        .param("mode", mode)
        .param("n_ref", n_ref)
}

fn cmd_sweep(
    design: Design,
    width: u32,
    mode: SweepMode,
    n_ref: u32,
    allow_huge: bool,
    out: Option<&Path>,
) -> Result<()> {
    let spec = SweepSpec {
        width,
        mode,
        n_ref,
        allow_huge,
    };
    let report = metrics::sweep(design, &spec)?;
    println!(
        "{} width={} {}: MARED={}% StdARED={}% MRED={}% max={}% ({} pairs, {} excluded)",
        report.design,
        report.width,
        report.mode,
        percent_cell(report.mared_percent),
        percent_cell(report.stdared_percent),
        percent_cell(report.mred_percent),
        percent_cell(report.max_ared_percent),
        report.pairs_included,
        report.pairs_excluded
    );
    if let Some(path) = out {
        let manifest = sweep_manifest(design, width, mode, n_ref);
        if is_csv(path) {
            let mut w = BufWriter::new(fs::File::create(path)?);
            writeln!(w, "{}", manifest.comment_line())?;
            writeln!(w, "design,width,mode,pairs_included,pairs_excluded,mared_percent,stdared_percent,mred_percent,stdred_percent,max_ared_percent")?;
            writeln!(w, "{}", sweep_csv_row(&report))?;
        } else {
            fs::write(path, json_document(manifest, &report)?)?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep_csv_row(r: &ErrorReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.design,
        r.width,
        r.mode,
        r.pairs_included,
        r.pairs_excluded,
        percent_cell(r.mared_percent),
        percent_cell(r.stdared_percent),
        percent_cell(r.mred_percent),
        percent_cell(r.stdred_percent),
        percent_cell(r.max_ared_percent)
    )
}

fn cmd_grid(design: Design, width: u32, n_ref: u32, out: &Path, raw: Option<&Path>) -> Result<()> {
    let manifest = RunManifest::new("grid")
        .param("design", design)
        .param("width", width)
        .param("n_ref", n_ref);

    let mut raw_writer = match raw {
        Some(path) => {
            let mut w = BufWriter::new(fs::File::create(path)?);
            writeln!(w, "{}", manifest.comment_line())?;
            writeln!(w, "a,b,ared_percent")?;
            Some(w)
        }
        None => None,
    };
    let mut raw_err = None;
    let rows: Vec<GridRow> = metrics::error_grid(design, width, n_ref, |a, b, ared| {
        if let Some(w) = raw_writer.as_mut() {
            if let Err(e) = writeln!(w, "{a},{b},{}", percent_cell(ared)) {
                raw_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = raw_err {
        return Err(e).context("writing raw grid rows");
    }

    let mut w = BufWriter::new(fs::File::create(out)?);
    writeln!(w, "{}", manifest.comment_line())?;
    writeln!(w, "a,mean_ared_percent,count")?;
    for row in &rows {
        writeln!(
            w,
            "{},{},{}",
            row.a,
            percent_cell(row.mean_ared_percent),
            row.count
        )?;
    }
    w.flush()?;
    println!("wrote {} binned rows to {}", rows.len(), out.display());
    if let Some(path) = raw {
        println!("wrote raw grid to {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ParetoReport {
    points: Vec<ParetoPoint>,
    front_indices: Vec<usize>,
    front_designs: Vec<String>,
}

fn parse_pareto_grid(s: &str) -> Result<(Vec<u32>, Vec<u32>)> {
    let parse_err = || format!("grid spec {s:?} (want e.g. `h=3..5,m=0,4,8`)");
    let (hs, ms) = s.split_once(",m=").with_context(parse_err)?;
    let (lo, hi) = hs
        .strip_prefix("h=")
        .and_then(|r| r.split_once(".."))
        .with_context(parse_err)?;
    let lo: u32 = lo.parse().with_context(parse_err)?;
    let hi: u32 = hi.parse().with_context(parse_err)?;
    if lo > hi {
        bail!("empty range in {}", parse_err());
    }
    let ms = ms
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| anyhow::anyhow!(parse_err()))
        })
        .collect::<Result<Vec<u32>>>()?;
    if ms.is_empty() {
        bail!("no segment counts in {}", parse_err());
    }
    Ok(((lo..=hi).collect(), ms))
}

fn cmd_pareto(grid: &str, width: u32, n_ref: u32, out: Option<&Path>) -> Result<()> {
    let (hs, ms) = parse_pareto_grid(grid)?;
    let mut points = Vec::new();
    for &h in &hs {
        for &m in &ms {
            let design = Design::ScaleTrim { h, m };
            let cfg = ScaleTrimConfig::calibrated(h, m, n_ref)?;
            let cost = costmodel::estimate(h, m, cfg.delta_ee, width)?;
            let report = metrics::sweep(
                design,
                &SweepSpec {
                    n_ref,
                    ..SweepSpec::exhaustive(width)
                },
            )?;
            points.push(ParetoPoint {
                design: design.to_string(),
                h,
                m,
                mared_percent: report.mared_percent,
                area: cost.area,
                delay: cost.delay,
                energy: cost.energy,
            });
        }
    }
    let front_indices = costmodel::pareto_front(&points);
    let front_designs: Vec<String> = front_indices
        .iter()
        .map(|&i| points[i].design.clone())
        .collect();

    println!(
        "{} candidate points, frontier of {}:",
        points.len(),
        front_indices.len()
    );
    for &i in &front_indices {
        let p = &points[i];
        println!(
            "  {} MARED={}% area={} delay={} energy={}",
            p.design,
            percent_cell(p.mared_percent),
            p.area,
            p.delay,
            p.energy
        );
    }

    if let Some(path) = out {
        let manifest = RunManifest::new("pareto")
            .param("grid", grid)
            .param("width", width)
            .param("n_ref", n_ref);
        if is_csv(path) {
            let mut w = BufWriter::new(fs::File::create(path)?);
            writeln!(w, "{}", manifest.comment_line())?;
            writeln!(w, "design,h,m,mared_percent,area,delay,energy,on_front")?;
            for (i, p) in points.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    p.design,
                    p.h,
                    p.m,
                    percent_cell(p.mared_percent),
                    p.area,
                    p.delay,
                    p.energy,
                    front_indices.contains(&i)
                )?;
            }
        } else {
            let report = ParetoReport {
                points,
                front_indices,
                front_designs,
            };
            fs::write(path, json_document(manifest, &report)?)?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_lut_export(config: &Path, out: &Path) -> Result<()> {
    let cfg = ScaleTrimConfig::from_json(&fs::read_to_string(config)?)
        .with_context(|| format!("reading configuration {}", config.display()))?;
    let table = cfg.comp_table();
    let words = compensate::export_hex(&table);
    if words.is_empty() {
        eprintln!(
            "warning: configuration {} has compensation disabled (m=0); wrote empty file",
            config.display()
        );
        fs::write(out, "")?;
    } else {
        fs::write(out, words.join("\n") + "\n")?;
    }
    println!("wrote {} table words to {}", words.len(), out.display());
    Ok(())
}

fn cmd_nn_compare(
    net_path: &Path,
    inputs_path: &Path,
    design: Design,
    n_ref: u32,
    out: Option<&Path>,
) -> Result<()> {
    let net = nn::load_net(net_path)?;
    let inputs = nn::load_inputs(inputs_path, net.input_dim())?;
    // Weight magnitudes and activations are both 8-bit quantities.
    let mul = design.multiplier(8, n_ref)?;
    let report = nn::compare(&net, &inputs, &mul)?;
    println!(
        "{} on {} samples: top-1 agreement {}%  logit |diff| max={} mean={:.3}",
        design,
        report.samples,
        percent_cell(report.top1_agreement_percent),
        report.max_logit_abs_diff,
        report.mean_logit_abs_diff
    );
    if let Some(path) = out {
        let manifest = RunManifest::new("nn-compare")
            .param("design", design)
            .param("net", net_path.display())
            .param("inputs", inputs_path.display())
            .param("n_ref", n_ref);
        fs::write(path, json_document(manifest, &report)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_gen_fixture(seed: u64, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let json = nn::gen_fixture(seed, out_dir)?;
    println!(
        "wrote {} (+ net.bin, inputs.bin) with seed {seed}",
        json.display()
    );
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}
