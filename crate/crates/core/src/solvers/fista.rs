use super::linop::{dot, norm, squared_norm, DenseOp, LinearOperator};
use super::{relative_change, Problem, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::prox::shrink;
use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct FistaOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Reset momentum whenever the objective increases.
    pub restart: bool,
    /// `‖A‖²`; estimated by power iteration when absent.
    pub lipschitz: Option<f64>,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20_000,
            restart: true,
            lipschitz: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FistaResult {
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Lasso duality gap at the returned point; `None` when some weight is
    /// zero, since the dual is then only feasible on a measure-zero set.
    pub gap: Option<f64>,
    pub history: Vec<f64>,
}

fn lasso_objective(a: &dyn LinearOperator, y: &[f64], w: &[f64], z: &[f64]) -> (f64, Vec<f64>) {
    let mut r = a.apply(z);
    r.iter_mut().zip(y).for_each(|(v, t)| *v -= t);
    let pen: f64 = z.iter().zip(w).map(|(v, l)| l * v.abs()).sum();
    (0.5 * dot(&r, &r) + pen, r)
}

/// Duality gap of `½‖Az − y‖² + Σ w_i |z_i|` from the scaled residual.
fn lasso_gap(a: &dyn LinearOperator, y: &[f64], w: &[f64], z: &[f64]) -> Option<f64> {
    if w.contains(&0.0) {
        return None;
    }
    let (primal, r) = lasso_objective(a, y, w, z);
    let theta: Vec<f64> = r.iter().map(|v| -v).collect();
    let c = a.adjoint(&theta);
    let scale = c
        .iter()
        .zip(w)
        .map(|(ci, l)| if ci.abs() > 0.0 { l / ci.abs() } else { f64::INFINITY })
        .fold(1.0f64, f64::min);
    let dual = 0.5 * dot(y, y)
        - 0.5
            * y.iter()
                .zip(&theta)
                .map(|(a, b)| (a - scale * b).powi(2))
                .sum::<f64>();
    Some((primal - dual).max(0.0))
}

/// FISTA for `min_z ½‖Az − y‖² + Σ w_i |z_i|` with step `1/‖A‖²`.
pub fn fista_l1(
    a: &dyn LinearOperator,
    y: &[f64],
    weights: &[f64],
    z0: Option<&[f64]>,
    opts: &FistaOptions,
) -> Result<FistaResult> {
    let n = a.input_len();
    if weights.len() != n {
        return Err(Error::dims(n, weights.len(), "fista weights"));
    }
    if y.len() != a.output_len() {
        return Err(Error::dims(a.output_len(), y.len(), "fista data"));
    }
    if let Some(l) = weights.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::invalid(format!("negative weight {l}")));
    }
    let lip = match opts.lipschitz {
        Some(l) => l,
        None => squared_norm(a, 1e-10, 1000) * (1.0 + 1e-6),
    };
    if !(lip > 0.0) {
        return Err(Error::Rank("operator is zero".into()));
    }
    let step = 1.0 / lip;
    let mut x = match z0 {
        Some(z) => {
            if z.len() != n {
                return Err(Error::dims(n, z.len(), "fista start"));
            }
            z.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut obj = lasso_objective(a, y, weights, &x).0;
    let mut v = x.clone();
    let mut t = 1.0f64;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut r = a.apply(&v);
        r.iter_mut().zip(y).for_each(|(p, q)| *p -= q);
        let g = a.adjoint(&r);
        let next: Vec<f64> = v
            .iter()
            .zip(&g)
            .zip(weights)
            .map(|((vi, gi), l)| shrink(vi - step * gi, step * l))
            .collect();
        if next.iter().any(|c| !c.is_finite()) {
            return Err(Error::Divergence {
                iteration: it + 1,
                hint: format!("non-finite iterate; step 1/L with L = {lip} may underestimate ‖A‖²"),
            });
        }
        let next_obj = lasso_objective(a, y, weights, &next).0;
        if opts.restart && next_obj > obj && t > 1.0 {
            // Momentum overshot: restart from the current point.
            v = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        v = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        t = t_next;
        let rel = relative_change(&next, &x);
        history.push(rel);
        x = next;
        obj = next_obj;
        if rel <= opts.tol {
            converged = true;
            break;
        }
    }
    let gap = lasso_gap(a, y, weights, &x);
    Ok(FistaResult {
        objective: obj,
        iterations,
        converged,
        gap,
        history,
        z: x,
    })
}

/// Synthesis-form lasso `min_z ½‖y − H G z‖² + λ‖z‖₁` with dense `H` and
/// dictionary `G`. Returns the codes and the synthesized signal `G z`.
pub fn fista_synthesis(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    opts: &FistaOptions,
) -> Result<(FistaResult, Vec<f64>)> {
    if h.ncols() != g.nrows() {
        return Err(Error::dims(h.ncols(), g.nrows(), "H columns vs dictionary rows"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be ≥ 0, got {lambda}")));
    }
    let a = DenseOp(h * g);
    let res = fista_l1(&a, y, &vec![lambda; g.ncols()], None, opts)?;
    let s = DenseOp(g.clone()).apply(&res.z);
    Ok((res, s))
}

/// `[H T; √κ (I − P)]`, whose Gram matrix is `TᵀHᵀHT + κ(I − P)`.
struct RangePenaltyOp<'a> {
    p: &'a Problem,
    sqrt_kappa: f64,
}

impl LinearOperator for RangePenaltyOp<'_> {
    fn input_len(&self) -> usize {
        self.p.coeff_len()
    }

    fn output_len(&self) -> usize {
        self.p.model.meas_len() + self.p.coeff_len()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let s = self.p.synthesize(z);
        let mut out = self.p.model.apply(&s).expect("shape fixed by construction");
        let pz = self.p.analyze(&s);
        out.extend(z.iter().zip(&pz).map(|(a, b)| self.sqrt_kappa * (a - b)));
        out
    }

    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        let m = self.p.model.meas_len();
        let (u1, u2) = u.split_at(m);
        let mut out = self.p.analyze(&self.p.model.adjoint(u1).expect("shape fixed by construction"));
        let pu = self.p.project(u2);
        out.iter_mut()
            .zip(u2.iter().zip(&pu))
            .for_each(|(o, (a, b))| *o += self.sqrt_kappa * (a - b));
        out
    }
}

/// Synthesis formulation restricted to `Ran(Tᵀ)`:
/// `min_{z ∈ Ran(Tᵀ)} ½‖y − H T z‖² + λ‖Λ z‖₁`.
///
/// The range constraint `(I − P) z = 0` is enforced by the method of
/// multipliers; every inner problem is a plain weighted lasso on the stacked
/// operator `[H T; √κ(I − P)]` solved by FISTA with warm starts.
pub fn fista_range_restricted(p: &Problem, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
    cfg.validate()?;
    let weights = p.l1_weights()?;
    let kappa: f64 = 1.0;
    let op = RangePenaltyOp {
        p,
        sqrt_kappa: kappa.sqrt(),
    };
    let rho = super::operator_norm(&p.model, &p.frame);
    let inner = FistaOptions {
        tol: cfg.tol * 0.1,
        max_iter: cfg.max_iter,
        restart: true,
        lipschitz: Some(rho.max(kappa) * (1.0 + 1e-6)),
    };
    let m = p.model.meas_len();
    let mut data = p.y.clone();
    data.extend(std::iter::repeat_n(0.0, p.coeff_len()));
    let mut z = p.backprojection()?;
    let mut nu = vec![0.0; p.coeff_len()];
    let mut history = Vec::new();
    let mut total = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        for (d, v) in data[m..].iter_mut().zip(&nu) {
            *d = -v / kappa.sqrt();
        }
        // inexact multiplier steps: the inner accuracy follows the outer defect
        let inner_tol = (0.1 * history.last().copied().unwrap_or(1.0f64)).clamp(inner.tol, 1e-3);
        let res = fista_l1(&op, &data, &weights, Some(&z), &FistaOptions { tol: inner_tol, ..inner.clone() })?;
        total += res.iterations;
        let pz = p.project(&res.z);
        let defect: Vec<f64> = res.z.iter().zip(&pz).map(|(a, b)| a - b).collect();
        nu.iter_mut().zip(&defect).for_each(|(n, d)| *n += kappa * d);
        let rel = relative_change(&res.z, &z);
        let feas = norm(&defect) / norm(&res.z).max(f64::MIN_POSITIVE);
        history.push(rel.max(feas));
        z = res.z;
        if rel <= cfg.tol && feas <= cfg.tol {
            converged = true;
            break;
        }
        if total >= cfg.max_iter * 50 {
            break;
        }
    }
    let s = p.synthesize(&z);
    let objective = p.objective(&s)?;
    let img = p.to_image(s)?;
    Ok((
        img,
        SolveReport {
            algorithm: "fista".into(),
            iterations: total,
            final_objective: objective,
            residual_history: history,
            optimality_residual: None,
            converged,
            tau: 1.0 / inner.lipschitz.unwrap_or(1.0),
        },
    ))
}
