//! `polyreg approx`: how fast inscribed polytopes approach a smooth ball.

use crate::config::{num, parse_sizes, resolve, OutDir};
use crate::error::{CliError, CliResult};
use crate::Globals;
use clap::Args;
use polyreg_core::geometry::{approximate_ball, measure_equivalence, BallTarget, SynthesisNorm};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Serialize, Debug)]
pub struct ApproxArgs {
    /// Dimension, 2 or 3
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    /// Comma-separated vertex-pair counts
    #[arg(long)]
    #[serde(skip)]
    n: Option<String>,
    /// l1, l2, linf, or lP for any P ≥ 1
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    /// Probe directions per polytope
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxConfig {
    pub seed: u64,
    pub dim: usize,
    pub n: Vec<usize>,
    pub target: String,
    pub samples: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self { seed: 0, dim: 2, n: vec![8, 16, 32, 64, 128], target: "l2".into(), samples: 20_000 }
    }
}

fn parse_target(s: &str) -> CliResult<BallTarget> {
    match s {
        "l2" => Ok(BallTarget::L2),
        "linf" => Ok(BallTarget::Lp(f64::INFINITY)),
        _ => s
            .strip_prefix('l')
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|p| *p >= 1.0)
            .map(BallTarget::Lp)
            .ok_or_else(|| CliError::Parse(format!("bad target {s:?}; use l1, l2, linf or lP"))),
    }
}

/// Least-squares slope of `ln ε` against `ln n` over the points with `ε > 0`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run(g: &Globals, args: &ApproxArgs) -> CliResult<()> {
    let mut flags = g.flags(args)?;
    if let Some(n) = &args.n {
        flags.insert("n".into(), json!(parse_sizes(n)?));
    }
    let cfg: ApproxConfig = resolve("approx", g.config.as_deref(), Value::Object(flags))?;
    let target = parse_target(&cfg.target)?;
    let out = OutDir::create(&g.out_dir())?;
    out.write_resolved("approx", &cfg)?;

    let norm = target.norm(cfg.dim)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &n in &cfg.n {
        let v = approximate_ball(cfg.dim, n, target, cfg.seed)?;
        let vertices = v.len();
        let rep = measure_equivalence(&SynthesisNorm(v), &norm, cfg.samples, cfg.seed)?;
        println!("n {n} epsilon {:e}", rep.epsilon);
        rows.push(vec![n as f64, rep.epsilon, rep.c0, rep.c0_upper, vertices as f64]);
        points.push((n, rep.epsilon));
    }
    out.write_csv("report.csv", &["n", "epsilon", "c0", "C0", "vertices"], &rows)?;
    let slope = loglog_slope(&points);
    match slope {
        Some(s) => println!("slope {s:.4}"),
        None => println!("slope undefined"),
    }
    let eps: Vec<Value> = points.iter().map(|p| num(p.1)).collect();
    out.write_json(
        "metrics.json",
        &json!({ "dim": cfg.dim, "target": cfg.target, "n": cfg.n, "epsilon": eps, "slope": slope.map(num) }),
    )?;
    Ok(())
}
