use super::linop::{dot, squared_norm, DenseOp, LinearOperator};
use super::{relative_change, Problem, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::FacetMatrix;
use crate::image::Image;
use crate::models::{ForwardKind, ForwardModel};
use crate::operators::prox::{clip_in_place, project_l1_unchecked};

/// Regularizer `R(Ks)`, handled through the projection onto the dual set.
#[derive(Clone, Debug, PartialEq)]
pub enum Regularizer {
    /// `λ‖v‖_∞`; dual set is the ℓ1 ball of radius λ.
    Linf { lambda: f64 },
    /// `Σ w_i |v_i|`; dual set is the box `|u_i| ≤ w_i`.
    WeightedL1 { weights: Vec<f64> },
}

impl Regularizer {
    fn value(&self, v: &[f64]) -> f64 {
        match self {
            Regularizer::Linf { lambda } => lambda * v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            Regularizer::WeightedL1 { weights } => {
                v.iter().zip(weights).map(|(x, w)| w * x.abs()).sum()
            }
        }
    }

    fn project_dual(&self, u: &mut Vec<f64>) {
        match self {
            Regularizer::Linf { lambda } => {
                if *lambda == 0.0 {
                    u.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    *u = project_l1_unchecked(u, *lambda);
                }
            }
            Regularizer::WeightedL1 { weights } => {
                for (v, w) in u.iter_mut().zip(weights) {
                    clip_in_place(std::slice::from_mut(v), *w);
                }
            }
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        match self {
            Regularizer::Linf { lambda } if !(*lambda >= 0.0) => {
                Err(Error::invalid(format!("lambda must be ≥ 0, got {lambda}")))
            }
            Regularizer::WeightedL1 { weights } => {
                if weights.len() != len {
                    return Err(Error::dims(len, weights.len(), "regularizer weights"));
                }
                if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
                    return Err(Error::invalid(format!("negative weight {w}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdhgOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// `‖K‖²`; estimated by power iteration when absent.
    pub k_norm_sq: Option<f64>,
    /// Use the accelerated step rule when the data term is strongly convex.
    pub accelerate: bool,
}

impl Default for PdhgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 20_000,
            k_norm_sq: None,
            accelerate: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdhgResult {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Primal-dual gap when the data term has a closed-form conjugate.
    pub gap: Option<f64>,
    pub history: Vec<f64>,
}

fn data_value(model: &ForwardModel, y: &[f64], s: &[f64]) -> Result<f64> {
    let hs = model.apply(s)?;
    Ok(0.5 * hs.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
}

/// `−F*(−Kᵀu)` for `F = ½‖g·s − y‖²`, the only case with a cheap conjugate.
fn dual_value(model: &ForwardModel, y: &[f64], ktu: &[f64]) -> Option<f64> {
    let g = match model.kind() {
        ForwardKind::Identity => 1.0,
        ForwardKind::ScaledIdentity(g) => *g,
        ForwardKind::MaskedDft { .. } => return None,
    };
    Some(-dot(ktu, ktu) / (2.0 * g * g) + dot(ktu, y) / g)
}

/// Chambolle-Pock iteration for `min_s ½‖Hs − y‖² + R(Ks)`.
///
/// The data step is the exact resolvent `(I + τHᵀH)⁻¹`. When `HᵀH` is
/// positive definite the step sizes follow the accelerated rule
/// `θ = 1/√(1 + 2γτ)`, `τ ← θτ`, `σ ← σ/θ`. Stopping uses the duality gap
/// when it is available and the relative change of `(s, u)` otherwise.
pub fn pdhg_solve(
    model: &ForwardModel,
    y: &[f64],
    k: &dyn LinearOperator,
    reg: &Regularizer,
    opts: &PdhgOptions,
) -> Result<PdhgResult> {
    if y.len() != model.meas_len() {
        return Err(Error::dims(model.meas_len(), y.len(), "measurement vector"));
    }
    if k.input_len() != model.image_len() {
        return Err(Error::dims(model.image_len(), k.input_len(), "operator input"));
    }
    reg.validate(k.output_len())?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("tol and max_iter must be positive"));
    }
    let l2 = match opts.k_norm_sq {
        Some(v) => v,
        None => squared_norm(k, 1e-10, 2000) * (1.0 + 1e-6),
    };
    let hty = model.adjoint(y)?;
    let gamma = if opts.accelerate { model.strong_convexity() } else { 0.0 };

    if !(l2 > 0.0) {
        return Err(Error::Rank("regularization operator K is zero".into()));
    }
    let has_gap = dual_value(model, y, &[]).is_some();
    let mut s = hty.clone();
    let mut u = vec![0.0; k.output_len()];
    let mut tau = 1.0 / l2.sqrt();
    let mut sigma = 1.0 / l2.sqrt();
    let mut s_bar = s.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut gap = None;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let ks = k.apply(&s_bar);
        let mut u_next: Vec<f64> = u.iter().zip(&ks).map(|(a, b)| a + sigma * b).collect();
        reg.project_dual(&mut u_next);
        let ktu = k.adjoint(&u_next);
        let v: Vec<f64> = s
            .iter()
            .zip(&ktu)
            .zip(&hty)
            .map(|((si, ki), hi)| si - tau * ki + tau * hi)
            .collect();
        let s_next = model.normal_solve(tau, &v)?;
        if s_next.iter().chain(&u_next).any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                iteration: it + 1,
                hint: format!("non-finite iterate; στ‖K‖² must stay below 1 (‖K‖² = {l2})"),
            });
        }
        let theta = if gamma > 0.0 { 1.0 / (1.0 + 2.0 * gamma * tau).sqrt() } else { 1.0 };
        s_bar = s_next.iter().zip(&s).map(|(a, b)| a + theta * (a - b)).collect();
        let rel = relative_change(&s_next, &s).max(relative_change(&u_next, &u));
        history.push(rel);
        tau *= theta;
        sigma /= theta;
        s = s_next;
        u = u_next;

        if has_gap {
            if it % 10 == 9 || it + 1 == opts.max_iter {
                let primal = data_value(model, y, &s)? + reg.value(&k.apply(&s));
                let dual = dual_value(model, y, &ktu).expect("closed-form conjugate");
                let g = (primal - dual).max(0.0);
                gap = Some(g);
                if g <= opts.tol * primal.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
        } else if rel <= opts.tol {
            converged = true;
            break;
        }
    }
    let objective = data_value(model, y, &s)? + reg.value(&k.apply(&s));
    Ok(PdhgResult {
        s,
        u,
        objective,
        iterations,
        converged,
        gap,
        history,
    })
}

/// `min_s ½‖y − Hs‖² + λ‖Fᵀ s‖_∞` for a facet matrix `F`.
pub fn pdhg_linf(
    model: &ForwardModel,
    f: &FacetMatrix,
    y: &[f64],
    lambda: f64,
    opts: &PdhgOptions,
) -> Result<PdhgResult> {
    if f.dim() != model.image_len() {
        return Err(Error::dims(model.image_len(), f.dim(), "facet dimension"));
    }
    let k = DenseOp(f.matrix().transpose());
    pdhg_solve(model, y, &k, &Regularizer::Linf { lambda }, opts)
}

/// Analysis form `min_s ½‖y − Hs‖² + λ‖Λ Tᵀ s‖₁` of a weighted-ℓ1 problem.
pub fn pdhg_analysis(p: &Problem, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
    cfg.validate()?;
    let weights = p.l1_weights()?;
    let op = p.analysis_op();
    let opts = PdhgOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        k_norm_sq: Some(1.0 + 1e-9),
        accelerate: false,
    };
    let res = pdhg_solve(&p.model, &p.y, &op, &Regularizer::WeightedL1 { weights }, &opts)?;
    let objective = p.objective(&res.s)?;
    let img = p.to_image(res.s)?;
    Ok((
        img,
        SolveReport {
            algorithm: "pdhg".into(),
            iterations: res.iterations,
            final_objective: objective,
            residual_history: res.history,
            optimality_residual: None,
            converged: res.converged,
            tau: 1.0,
        },
    ))
}
