//! `polyreg mri`: reconstruction from subsampled Fourier measurements.

use crate::config::{num, parse_vector, resolve, with_path, OutDir};
use crate::error::{CliError, CliResult};
use crate::recon::{ground_truth, write_result, Grid, ReconFlags, Reconstructor, RegKind, SolverFlags};
use crate::Globals;
use clap::Args;
use polyreg_core::io::{read_mask, write_measurements, write_pbm, write_pgm, BitDepth};
use polyreg_core::models::{make_mask, psnr, MaskSpec, PhantomKind};
use polyreg_core::operators::PotentialSpec;
use polyreg_core::{Error, ForwardModel, SamplingMask, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Args, Serialize, Debug)]
pub struct MriArgs {
    /// radial:LINES, random:DENSITY, cartesian:DENSITY[:SIGMA] or full
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<String>,
    /// Mask file (PBM or JSON); overrides --mask
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mask_file: Option<PathBuf>,
    /// Also write the measurements as raw little-endian f64 with sidecars
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    save_measurements: bool,
    #[command(flatten)]
    #[serde(flatten)]
    common: ReconFlags,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MriConfig {
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub phantom: PhantomKind,
    pub size: usize,
    pub mask: String,
    pub mask_file: Option<PathBuf>,
    pub save_measurements: bool,
    pub regularizer: RegKind,
    pub frame: String,
    pub potential: Option<PotentialSpec>,
    pub lambda: f64,
    pub tune: bool,
    pub grid: Grid,
    pub solver: SolverConfig,
}

impl Default for MriConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            input: None,
            phantom: PhantomKind::SheppLike,
            size: 64,
            mask: "radial:30".into(),
            mask_file: None,
            save_measurements: false,
            regularizer: RegKind::Frame,
            frame: "haar2".into(),
            potential: None,
            lambda: 1e-3,
            tune: false,
            grid: Grid { lo: -5.0, hi: -1.0, n: 17 },
            solver: SolverConfig { max_iter: 20_000, ..SolverConfig::default() },
        }
    }
}

/// Parses `radial:30`, `random:0.3`, `cartesian:0.3[:sigma]` or `full`.
fn parse_mask(s: &str, h: usize, w: usize, seed: u64) -> CliResult<SamplingMask> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let args = if rest.is_empty() { Vec::new() } else { parse_vector(&rest.replace(':', ","))? };
    let spec = match (kind, &args[..]) {
        ("full", []) => return Ok(SamplingMask::full(h, w)),
        ("radial", [n]) if *n >= 1.0 && n.fract() == 0.0 => MaskSpec::Radial { n_lines: *n as usize },
        ("random", [d]) => MaskSpec::Random { density: *d },
        ("cartesian", [d]) => MaskSpec::Cartesian { density: *d, sigma: None },
        ("cartesian", [d, s]) => MaskSpec::Cartesian { density: *d, sigma: Some(*s) },
        _ => return Err(CliError::Parse(format!("bad mask spec {s:?}"))),
    };
    Ok(make_mask(&spec, h, w, seed)?)
}

pub fn run(g: &Globals, args: &MriArgs) -> CliResult<()> {
    let mut flags = g.flags(args)?;
    args.common.extend(&mut flags)?;
    let mut cfg: MriConfig = resolve("mri", g.config.as_deref(), Value::Object(flags))?;
    let out = OutDir::create(&g.out_dir())?;

    let truth = ground_truth(cfg.input.as_deref(), cfg.phantom, cfg.size, cfg.seed)?;
    let mask = match &cfg.mask_file {
        Some(p) => with_path(p, read_mask(p))?,
        None => parse_mask(&cfg.mask, truth.h, truth.w, cfg.seed)?,
    };
    if (mask.h, mask.w) != (truth.h, truth.w) {
        return Err(Error::InvalidParameter(format!(
            "mask is {}x{} but the image is {}x{}",
            mask.h, mask.w, truth.h, truth.w
        ))
        .into());
    }
    let rec = Reconstructor::new(cfg.regularizer, &cfg.frame, &mut cfg.potential, cfg.solver.clone())?;
    out.write_resolved("mri", &cfg)?;

    let kept = mask.kept_fraction();
    write_pbm(&out.path("mask.pbm"), &mask)?;
    let model = ForwardModel::masked_dft(mask.clone());
    let y = model.apply_image(&truth)?;
    if cfg.save_measurements {
        write_measurements(&out.path("measurements.raw"), &y, &mask)?;
    }
    let zero_fill = model.backproject(&y)?;
    write_pgm(&out.path("zerofill.pgm"), &zero_fill, BitDepth::Eight)?;

    let tuning = cfg.tune.then_some((&cfg.grid, &truth));
    let sel = rec.run_or_tune(&model, &y, cfg.lambda, tuning)?;
    write_result(&out, &sel.outcome.image)?;
    sel.write_report(&out)?;
    let mut m = sel.metrics(Some(&truth), "psnr_recon")?;
    m.insert("psnr_zero_fill".into(), num(psnr(&truth, &zero_fill, 1.0)?));
    m.insert("kept_fraction".into(), num(kept));
    m.insert("regularizer".into(), json!(cfg.regularizer));
    m.insert("algorithm".into(), json!(cfg.solver.algorithm));
    let metrics = Value::Object(m);
    out.write_json("metrics.json", &metrics)?;
    println!(
        "psnr_zero_fill {} psnr_recon {} lambda {} iterations {}",
        metrics["psnr_zero_fill"], metrics["psnr_recon"], metrics["lambda"], metrics["iterations"]
    );
    Ok(())
}
