//! Solvers for `min_s ½‖y − Hs‖² + λ Φ(Tᵀs)` and its synthesis and ℓ∞
//! relatives.
//!
//! All image-domain objectives are reported through [`Problem::objective`],
//! so the different algorithms can be compared on equal terms.

mod apgd;
mod drs;
mod fista;
pub mod linop;
mod optimality;
mod pdhg;

pub use apgd::apgd_solve;
pub use drs::drs_solve;
pub use fista::{fista_l1, fista_range_restricted, fista_synthesis, FistaOptions, FistaResult};
pub use linop::{power_iteration, squared_norm, DenseOp, FrameAnalysisOp, GradientOp, LinearOperator};
pub use optimality::{check_optimality, check_optimality_with};
pub use pdhg::{pdhg_analysis, pdhg_linf, pdhg_solve, PdhgOptions, PdhgResult, Regularizer};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::models::{ForwardKind, ForwardModel};
use crate::operators::{SeparablePotential, TightFrame};
use linop::norm;
use serde::{Deserialize, Serialize};

/// Data, frame and potential of one reconstruction problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: ForwardModel,
    pub y: Vec<f64>,
    pub frame: TightFrame,
    pub potential: SeparablePotential,
    /// Global weight multiplying the potential.
    pub lambda: f64,
}

impl Problem {
    pub fn new(
        model: ForwardModel,
        y: Vec<f64>,
        frame: TightFrame,
        potential: SeparablePotential,
        lambda: f64,
    ) -> Result<Self> {
        if y.len() != model.meas_len() {
            return Err(Error::dims(model.meas_len(), y.len(), "measurement vector"));
        }
        if potential.n_chan() != frame.n_chan() {
            return Err(Error::dims(frame.n_chan(), potential.n_chan(), "potential channels vs frame"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and ≥ 0, got {lambda}")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("measurements contain non-finite values"));
        }
        Ok(Self {
            model,
            y,
            frame,
            potential,
            lambda,
        })
    }

    /// Denoising problem `H = I` for an observed image.
    pub fn denoising(
        noisy: &Image,
        frame: TightFrame,
        potential: SeparablePotential,
        lambda: f64,
    ) -> Result<Self> {
        Self::new(
            ForwardModel::identity(noisy.h, noisy.w),
            noisy.data.clone(),
            frame,
            potential,
            lambda,
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut p = self.clone();
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and ≥ 0, got {lambda}")));
        }
        p.lambda = lambda;
        Ok(p)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.model.shape()
    }

    pub fn image_len(&self) -> usize {
        self.model.image_len()
    }

    pub fn coeff_len(&self) -> usize {
        self.frame.n_chan() * self.image_len()
    }

    pub(crate) fn analysis_op(&self) -> FrameAnalysisOp<'_> {
        let (h, w) = self.shape();
        FrameAnalysisOp {
            frame: &self.frame,
            h,
            w,
        }
    }

    /// `Tᵀ s`.
    pub fn analyze(&self, s: &[f64]) -> Vec<f64> {
        self.analysis_op().apply(s)
    }

    /// `T z`.
    pub fn synthesize(&self, z: &[f64]) -> Vec<f64> {
        self.analysis_op().adjoint(z)
    }

    /// `Tᵀ T z`.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        self.analyze(&self.synthesize(z))
    }

    /// `Tᵀ Hᵀ (H T z − y)`, the gradient of the data term in the
    /// coefficient domain.
    pub(crate) fn data_grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        let s = self.synthesize(z);
        let mut r = self.model.apply(&s)?;
        r.iter_mut().zip(&self.y).for_each(|(a, b)| *a -= b);
        Ok(self.analyze(&self.model.adjoint(&r)?))
    }

    /// `Tᵀ Hᵀ y`.
    pub fn backprojection(&self) -> Result<Vec<f64>> {
        Ok(self.analyze(&self.model.adjoint(&self.y)?))
    }

    pub fn data_term(&self, s: &[f64]) -> Result<f64> {
        let hs = self.model.apply(s)?;
        Ok(0.5 * hs.iter().zip(&self.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    /// `½‖Hs − y‖² + λ Φ(Tᵀ s)`.
    pub fn objective(&self, s: &[f64]) -> Result<f64> {
        let data = self.data_term(s)?;
        if self.lambda == 0.0 {
            return Ok(data);
        }
        let z = self.analyze(s);
        Ok(data + self.lambda * self.potential.value_slice(&z, self.image_len()))
    }

    /// Per-coefficient ℓ1 weights `λ·λ_c` for a weighted-ℓ1 potential.
    pub(crate) fn l1_weights(&self) -> Result<Vec<f64>> {
        if self.potential.kind_name() != "weighted_l1" {
            return Err(Error::Unsupported(format!(
                "this solver needs a weighted_l1 potential, got {}",
                self.potential.kind_name()
            )));
        }
        let plane = self.image_len();
        Ok(self
            .potential
            .lambda()
            .iter()
            .flat_map(|l| std::iter::repeat_n(self.lambda * l, plane))
            .collect())
    }

    pub(crate) fn to_image(&self, s: Vec<f64>) -> Result<Image> {
        let (h, w) = self.shape();
        Image::new(h, w, s).map_err(|_| Error::Divergence {
            iteration: 0,
            hint: "solution contains non-finite values".into(),
        })
    }
}

/// Largest eigenvalue `ρ` of `Tᵀ HᵀH T`.
pub fn operator_norm(model: &ForwardModel, frame: &TightFrame) -> f64 {
    let (h, w) = model.shape();
    let op = FrameAnalysisOp { frame, h, w };
    power_iteration(
        op.output_len(),
        |z| {
            let s = op.adjoint(z);
            op.apply(&model.normal(&s).expect("shape fixed by construction"))
        },
        1e-8,
        500,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Drs,
    Apgd,
    Fista,
    Pdhg,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drs" => Ok(Self::Drs),
            "apgd" => Ok(Self::Apgd),
            "fista" => Ok(Self::Fista),
            "pdhg" => Ok(Self::Pdhg),
            other => Err(Error::invalid(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// `{"algorithm", "tau", "tol", "max_iter", "momentum"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Step size; `None` picks 1, or `1.9/ρ` when `ρ > 1.9`.
    pub tau: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub momentum: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Drs,
            tau: None,
            tol: 1e-5,
            max_iter: 5000,
            momentum: false,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, tol: f64, max_iter: usize) -> Self {
        Self {
            algorithm,
            tol,
            max_iter,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("tau must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: String,
    pub iterations: usize,
    pub final_objective: f64,
    /// Relative iterate change per iteration.
    pub residual_history: Vec<f64>,
    pub optimality_residual: Option<f64>,
    pub converged: bool,
    pub tau: f64,
}

/// Step size: the requested value, else 1 with a fallback to `1.9/ρ`.
pub fn default_tau(rho: f64) -> f64 {
    if rho > 1.9 {
        1.9 / rho
    } else {
        1.0
    }
}

pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let d = linop::dist(new, old);
    let n = norm(old);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

pub(crate) fn check_finite(v: &[f64], iteration: usize, tau: f64, rho: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            iteration,
            hint: format!(
                "non-finite iterate with tau = {tau}; the step must satisfy tau < 2/rho = {}",
                2.0 / rho
            ),
        })
    }
}

/// Runs the configured algorithm on `problem`.
///
/// `fista` uses the range-restricted synthesis formulation and `pdhg` the
/// analysis formulation; both need a weighted-ℓ1 potential. With `λ = 0` the
/// minimum-norm least-squares solution `H⁺y` is returned without iterating.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<(Image, SolveReport)> {
    if problem.lambda == 0.0 {
        return least_squares(problem, config);
    }
    match config.algorithm {
        Algorithm::Drs => drs_solve(problem, config),
        Algorithm::Apgd => apgd_solve(problem, config),
        Algorithm::Fista => fista_range_restricted(problem, config),
        Algorithm::Pdhg => pdhg_analysis(problem, config),
    }
}

/// `H⁺y`: `y/g` for `H = g·I`, and `Hᵀy` when `H` is a partial isometry.
fn least_squares(p: &Problem, config: &SolverConfig) -> Result<(Image, SolveReport)> {
    config.validate()?;
    let s = match p.model.kind() {
        ForwardKind::ScaledIdentity(g) => p.y.iter().map(|v| v / g).collect(),
        ForwardKind::Identity | ForwardKind::MaskedDft { .. } => p.model.adjoint(&p.y)?,
    };
    let (h, w) = p.shape();
    let report = SolveReport {
        algorithm: format!("{:?}", config.algorithm).to_lowercase(),
        iterations: 0,
        final_objective: p.objective(&s)?,
        residual_history: Vec::new(),
        optimality_residual: None,
        converged: true,
        tau: config.tau.unwrap_or(1.0),
    };
    Ok((Image::new(h, w, s)?, report))
}
