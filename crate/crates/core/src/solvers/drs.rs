use super::{check_finite, default_tau, operator_norm, relative_change, Problem, SolveReport, SolverConfig};
use crate::error::Result;
use crate::image::Image;

/// Douglas-Rachford splitting in the coefficient domain.
///
/// ```text
/// z⁰      = Tᵀ Hᵀ y
/// z^{n+½} = prox_{τλΦ}(zⁿ − τ Tᵀ Hᵀ (H T zⁿ − y))
/// z^{n+1} = Tᵀ T (2 z^{n+½} − zⁿ) + zⁿ − z^{n+½}
/// ```
///
/// Iteration stops once `‖z^{n+1} − zⁿ‖ / ‖zⁿ‖ ≤ tol`. The returned image is
/// `T z^{n+½}` at the last half step, which lies in the potential's domain.
pub fn drs_solve(p: &Problem, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
    cfg.validate()?;
    let rho = operator_norm(&p.model, &p.frame);
    let tau = cfg.tau.unwrap_or_else(|| default_tau(rho));
    let plane = p.image_len();
    let scale = tau * p.lambda;

    let mut z = p.backprojection()?;
    let mut half = z.clone();
    let mut history = Vec::new();
    let mut converged = false;
    for it in 0..cfg.max_iter {
        let g = p.data_grad(&z)?;
        half.iter_mut()
            .zip(z.iter().zip(&g))
            .for_each(|(h, (a, b))| *h = a - tau * b);
        p.potential.prox_in_place(&mut half, plane, scale);
        let reflected: Vec<f64> = half.iter().zip(&z).map(|(h, a)| 2.0 * h - a).collect();
        let mut next = p.project(&reflected);
        next.iter_mut()
            .zip(z.iter().zip(&half))
            .for_each(|(n, (a, h))| *n += a - h);
        check_finite(&next, it + 1, tau, rho)?;
        let rel = relative_change(&next, &z);
        history.push(rel);
        z = next;
        if rel <= cfg.tol {
            converged = true;
            break;
        }
    }
    let s = p.synthesize(&half);
    let objective = p.objective(&s)?;
    let img = p.to_image(s)?;
    Ok((
        img,
        SolveReport {
            algorithm: "drs".into(),
            iterations: history.len(),
            final_objective: objective,
            residual_history: history,
            optimality_residual: None,
            converged,
            tau,
        },
    ))
}
