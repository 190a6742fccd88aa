//! `polyreg denoise`: `H = I` reconstruction of a noisy image.

use crate::config::{num, resolve, with_path, OutDir};
use crate::error::{CliError, CliResult};
use crate::recon::{ground_truth, write_result, Grid, ReconFlags, Reconstructor, RegKind, SolverFlags};
use crate::Globals;
use clap::Args;
use polyreg_core::io::{read_image, write_pgm, BitDepth};
use polyreg_core::models::{add_noise, psnr, PhantomKind};
use polyreg_core::operators::PotentialSpec;
use polyreg_core::{Error, ForwardModel, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Args, Serialize, Debug)]
pub struct DenoiseArgs {
    /// Noise standard deviation on the [0, 1] intensity scale
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    /// Treat --input as already noisy; no noise is added and PSNR is not reported
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    noisy_input: bool,
    #[command(flatten)]
    #[serde(flatten)]
    common: ReconFlags,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub noisy_input: bool,
    pub phantom: PhantomKind,
    pub size: usize,
    pub sigma: f64,
    pub regularizer: RegKind,
    pub frame: String,
    pub potential: Option<PotentialSpec>,
    pub lambda: f64,
    pub tune: bool,
    pub grid: Grid,
    pub solver: SolverConfig,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            input: None,
            noisy_input: false,
            phantom: PhantomKind::PiecewiseConstant,
            size: 64,
            sigma: 25.0 / 255.0,
            regularizer: RegKind::Frame,
            frame: "haar2".into(),
            potential: None,
            lambda: 0.1,
            tune: false,
            grid: Grid { lo: -3.0, hi: 0.0, n: 20 },
            solver: SolverConfig::default(),
        }
    }
}

pub fn run(g: &Globals, args: &DenoiseArgs) -> CliResult<()> {
    let mut flags = g.flags(args)?;
    args.common.extend(&mut flags)?;
    let mut cfg: DenoiseConfig = resolve("denoise", g.config.as_deref(), Value::Object(flags))?;
    let out = OutDir::create(&g.out_dir())?;

    let (truth, noisy) = if cfg.noisy_input {
        let path = cfg
            .input
            .as_deref()
            .ok_or_else(|| CliError::Parse("noisy_input needs an input image".into()))?;
        (None, with_path(path, read_image(path))?)
    } else {
        let t = ground_truth(cfg.input.as_deref(), cfg.phantom, cfg.size, cfg.seed)?;
        let n = add_noise(&t, cfg.sigma, cfg.seed)?;
        (Some(t), n)
    };
    if cfg.tune && truth.is_none() {
        return Err(Error::InvalidParameter("λ tuning needs a ground-truth image".into()).into());
    }

    let rec = Reconstructor::new(cfg.regularizer, &cfg.frame, &mut cfg.potential, cfg.solver.clone())?;
    out.write_resolved("denoise", &cfg)?;
    let model = ForwardModel::identity(noisy.h, noisy.w);
    let tuning = match (&truth, cfg.tune) {
        (Some(t), true) => Some((&cfg.grid, t)),
        _ => None,
    };
    let sel = rec.run_or_tune(&model, &noisy.data, cfg.lambda, tuning)?;

    write_result(&out, &sel.outcome.image)?;
    write_pgm(&out.path("noisy.pgm"), &noisy, BitDepth::Eight)?;
    sel.write_report(&out)?;
    let mut m = sel.metrics(truth.as_ref(), "psnr_denoised")?;
    let psnr_noisy = match &truth {
        Some(t) => num(psnr(t, &noisy, 1.0)?),
        None => Value::Null,
    };
    m.insert("psnr_noisy".into(), psnr_noisy);
    m.insert("regularizer".into(), json!(cfg.regularizer));
    m.insert("algorithm".into(), json!(cfg.solver.algorithm));
    let metrics = Value::Object(m);
    out.write_json("metrics.json", &metrics)?;
    println!(
        "psnr_noisy {} psnr_denoised {} lambda {} iterations {}",
        metrics["psnr_noisy"], metrics["psnr_denoised"], metrics["lambda"], metrics["iterations"]
    );
    Ok(())
}
