//! Pieces shared by `denoise` and `mri`: regularizer choice, λ search and
//! output files.

use crate::config::{num, parse_vector, with_path, OutDir};
use crate::error::{CliError, CliResult};
use clap::{Args, ValueEnum};
use polyreg_core::io::{read_image, write_pfmg, write_pgm, BitDepth};
use polyreg_core::models::{logspace, make_phantom, psnr, tune_lambda, tv_reconstruct, PhantomKind};
use polyreg_core::operators::PotentialSpec;
use polyreg_core::solvers::PdhgOptions;
use polyreg_core::{
    solve, Algorithm, ForwardModel, Image, Problem, SeparablePotential, SolverConfig, TightFrame,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    /// Separable potential on tight-frame coefficients
    Frame,
    /// Anisotropic total variation
    Tv,
}

/// `n` log-spaced λ values from `10^lo` to `10^hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        logspace(self.lo, self.hi, self.n)
    }

    fn parse(s: &str) -> CliResult<Self> {
        match parse_vector(s)?[..] {
            [lo, hi, n] if n >= 1.0 && n.fract() == 0.0 => Ok(Grid { lo, hi, n: n as usize }),
            _ => Err(CliError::Parse(format!("grid must be \"LO,HI,N\" with integer N ≥ 1, got {s:?}"))),
        }
    }
}

/// Solver flags, merged into the `solver` section of the config.
#[derive(Args, Serialize, Default, Debug)]
pub struct SolverFlags {
    /// drs, apgd, fista or pdhg
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    /// Step size (default 1, or 1.9/ρ when the data term is steep)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Relative-change stopping tolerance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Enable the momentum variant where the algorithm has one
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub momentum: bool,
}

/// Flags common to both reconstruction commands.
#[derive(Args, Serialize, Default, Debug)]
pub struct ReconFlags {
    /// Ground-truth image (PGM or PFMG); a phantom is generated otherwise
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// piecewise_constant or shepp_like
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phantom: Option<PhantomKind>,
    /// Phantom side length
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegKind>,
    /// Frame preset (identity, haar2, dct3) or frame JSON file
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
    /// Potential JSON file; default is weighted ℓ1 on the detail channels
    #[arg(long)]
    #[serde(skip)]
    pub potential: Option<PathBuf>,
    /// Regularization weight
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Pick λ on the grid by PSNR against the ground truth
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub tune: bool,
    /// λ grid as "LO,HI,N": N values from 10^LO to 10^HI
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip)]
    pub grid: Option<String>,
}

impl ReconFlags {
    /// Adds the values that need parsing or file reads to the flag object.
    pub fn extend(&self, flags: &mut Map<String, Value>) -> CliResult<()> {
        if let Some(path) = &self.potential {
            let text = read_text(path)?;
            let spec: PotentialSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Parse(format!("potential {}: {e}", path.display())))?;
            flags.insert("potential".into(), serde_json::to_value(spec)?);
        }
        if let Some(g) = &self.grid {
            flags.insert("grid".into(), serde_json::to_value(Grid::parse(g)?)?);
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Frame preset name, or a path to a frame JSON file.
pub fn load_frame(name: &str) -> CliResult<TightFrame> {
    let path = Path::new(name);
    if path.is_file() {
        let text = read_text(path)?;
        let spec = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("frame {}: {e}", path.display())))?;
        Ok(TightFrame::from_spec(&spec)?)
    } else {
        Ok(TightFrame::preset(name)?)
    }
}

/// Ground truth from a file, else a seeded phantom.
pub fn ground_truth(input: Option<&Path>, phantom: PhantomKind, size: usize, seed: u64) -> CliResult<Image> {
    match input {
        Some(p) => with_path(p, read_image(p)),
        None => Ok(make_phantom(phantom, size, size, seed)?),
    }
}

/// A configured regularizer, ready to solve for any λ.
pub struct Reconstructor {
    frame: TightFrame,
    potential: Option<SeparablePotential>,
    pub solver: SolverConfig,
}

impl Reconstructor {
    /// Builds the regularizer; a missing potential becomes weighted ℓ1 on the
    /// detail channels and is written back into `spec`.
    pub fn new(
        regularizer: RegKind,
        frame: &str,
        spec: &mut Option<PotentialSpec>,
        solver: SolverConfig,
    ) -> CliResult<Self> {
        let frame = load_frame(frame)?;
        let potential = match regularizer {
            RegKind::Tv => None,
            RegKind::Frame => {
                let p = match spec {
                    Some(s) => SeparablePotential::from_spec(s)?,
                    None => SeparablePotential::detail_l1(frame.n_chan(), 1.0)?,
                };
                *spec = Some(p.to_spec());
                Some(p)
            }
        };
        Ok(Self { frame, potential, solver })
    }

    pub fn run(&self, model: &ForwardModel, y: &[f64], lambda: f64) -> CliResult<Outcome> {
        match &self.potential {
            Some(pot) => {
                let p = Problem::new(model.clone(), y.to_vec(), self.frame.clone(), pot.clone(), lambda)?;
                let (image, r) = solve(&p, &self.solver)?;
                Ok(Outcome {
                    image,
                    iterations: r.iterations,
                    objective: r.final_objective,
                    converged: r.converged,
                    history: r.residual_history,
                })
            }
            None => {
                let opts = PdhgOptions {
                    tol: self.solver.tol,
                    max_iter: self.solver.max_iter,
                    ..PdhgOptions::default()
                };
                let (image, r) = tv_reconstruct(model, y, lambda, &opts)?;
                Ok(Outcome {
                    image,
                    iterations: r.iterations,
                    objective: r.objective,
                    converged: r.converged,
                    history: r.history,
                })
            }
        }
    }

    /// Solves at `lambda`, or at the best grid point when `grid` is given.
    pub fn run_or_tune(
        &self,
        model: &ForwardModel,
        y: &[f64],
        lambda: f64,
        grid: Option<(&Grid, &Image)>,
    ) -> CliResult<Selected> {
        match grid {
            None => Ok(Selected { lambda, outcome: self.run(model, y, lambda)?, curve: Vec::new() }),
            Some((g, truth)) => {
                let best = tune_lambda(&g.values(), truth, |lam| {
                    let o = self.run(model, y, lam).map_err(into_core)?;
                    Ok((o.image.clone(), o))
                })?;
                let (_, outcome) = best.output;
                Ok(Selected { lambda: best.lambda, outcome, curve: best.curve })
            }
        }
    }
}

fn into_core(e: CliError) -> polyreg_core::Error {
    match e {
        CliError::Core(e) => e,
        other => polyreg_core::Error::Parse(other.to_string()),
    }
}

pub struct Outcome {
    pub image: Image,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

pub struct Selected {
    pub lambda: f64,
    pub outcome: Outcome,
    /// `(λ, PSNR)` per grid point when tuned.
    pub curve: Vec<(f64, f64)>,
}

impl Selected {
    /// `report.csv`: the tuning curve, else the per-iteration residuals.
    pub fn write_report(&self, out: &OutDir) -> CliResult<()> {
        if self.curve.is_empty() {
            let rows: Vec<Vec<f64>> = self
                .outcome
                .history
                .iter()
                .enumerate()
                .map(|(k, r)| vec![(k + 1) as f64, *r])
                .collect();
            out.write_csv("report.csv", &["iteration", "residual"], &rows)
        } else {
            let rows: Vec<Vec<f64>> = self.curve.iter().map(|&(l, p)| vec![l, p]).collect();
            out.write_csv("report.csv", &["lambda", "psnr"], &rows)
        }
    }

    pub fn metrics(&self, truth: Option<&Image>, psnr_key: &str) -> CliResult<Map<String, Value>> {
        let mut m = Map::new();
        m.insert("lambda".into(), num(self.lambda));
        m.insert("iterations".into(), json!(self.outcome.iterations));
        m.insert("objective".into(), num(self.outcome.objective));
        m.insert("converged".into(), json!(self.outcome.converged));
        let p = match truth {
            Some(t) => num(psnr(t, &self.outcome.image, 1.0)?),
            None => Value::Null,
        };
        m.insert(psnr_key.into(), p);
        Ok(m)
    }
}

/// `result.pgm` (8-bit preview) and `result.pfg` (exact values).
pub fn write_result(out: &OutDir, img: &Image) -> CliResult<()> {
    write_pgm(&out.path("result.pgm"), img, BitDepth::Eight)?;
    write_pfmg(&out.path("result.pfg"), img)?;
    Ok(())
}
