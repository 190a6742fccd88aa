use super::{check_finite, default_tau, operator_norm, relative_change, Problem, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::image::Image;

/// Projected gradient descent in the coefficient domain.
///
/// ```text
/// z^{n+½} = zⁿ − τ (Tᵀ Hᵀ (H T zⁿ − y) + λ φ'(zⁿ))
/// z^{n+1} = Tᵀ T z^{n+½}
/// ```
///
/// With `momentum` the gradient is taken at a Nesterov extrapolation point.
/// When no step is given, τ is capped by the curvature of the potential as
/// well as by `ρ`: `1.9/(ρ + λ·L_φ)` without momentum, `1/(ρ + λ·L_φ)` with.
pub fn apgd_solve(p: &Problem, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
    cfg.validate()?;
    let curvature = if p.lambda == 0.0 {
        0.0
    } else {
        p.potential.curvature_bound().ok_or_else(|| {
            Error::Unsupported(format!(
                "{} potential is not differentiable; use drs, fista or pdhg",
                p.potential.kind_name()
            ))
        })?
    };
    let rho = operator_norm(&p.model, &p.frame);
    let lip = rho + p.lambda * curvature;
    let tau = cfg.tau.unwrap_or_else(|| {
        if cfg.momentum {
            default_tau(rho).min(1.0 / lip)
        } else {
            default_tau(rho).min(1.9 / lip)
        }
    });
    let plane = p.image_len();

    let mut z = p.backprojection()?;
    let mut z_prev = z.clone();
    let mut t = 1.0f64;
    let mut history = Vec::new();
    let mut converged = false;
    for it in 0..cfg.max_iter {
        let v: Vec<f64> = if cfg.momentum {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            t = t_next;
            z.iter().zip(&z_prev).map(|(a, b)| a + beta * (a - b)).collect()
        } else {
            z.clone()
        };
        let mut g = p.data_grad(&v)?;
        if p.lambda != 0.0 {
            let mut phi = v.clone();
            p.potential.grad_in_place(&mut phi, plane)?;
            g.iter_mut().zip(&phi).for_each(|(a, b)| *a += p.lambda * b);
        }
        let half: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a - tau * b).collect();
        let next = p.project(&half);
        check_finite(&next, it + 1, tau, lip)?;
        let rel = relative_change(&next, &z);
        history.push(rel);
        z_prev = std::mem::replace(&mut z, next);
        if rel <= cfg.tol {
            converged = true;
            break;
        }
    }
    let s = p.synthesize(&z);
    let objective = p.objective(&s)?;
    let img = p.to_image(s)?;
    Ok((
        img,
        SolveReport {
            algorithm: "apgd".into(),
            iterations: history.len(),
            final_objective: objective,
            residual_history: history,
            optimality_residual: None,
            converged,
            tau,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ForwardModel;
    use crate::operators::{SeparablePotential, TightFrame};
    use crate::rng::SeededRng;

    fn problem(potential: SeparablePotential, lambda: f64) -> Problem {
        let mut rng = SeededRng::new(77);
        let y: Vec<f64> = (0..256).map(|_| rng.uniform()).collect();
        Problem::new(ForwardModel::identity(16, 16), y, TightFrame::haar2(), potential, lambda).unwrap()
    }

    #[test]
    fn zero_lambda_converges_to_data() {
        let p = problem(SeparablePotential::huber(vec![0.0, 1.0, 1.0, 1.0], 0.01).unwrap(), 0.0);
        let (s, r) = apgd_solve(&p, &SolverConfig { tol: 1e-10, ..Default::default() }).unwrap();
        assert!(r.converged);
        for (a, b) in s.data.iter().zip(&p.y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_l1() {
        let p = problem(SeparablePotential::detail_l1(4, 1.0).unwrap(), 0.1);
        assert!(matches!(
            apgd_solve(&p, &SolverConfig::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn descent_without_momentum() {
        let p = problem(SeparablePotential::huber(vec![0.0, 1.0, 1.0, 1.0], 0.5).unwrap(), 0.1);
        let rho = operator_norm(&p.model, &p.frame);
        let mut last = f64::INFINITY;
        for k in 1..40 {
            let cfg = SolverConfig { tau: Some(1.0 / rho), tol: 1e-300, max_iter: k, ..Default::default() };
            let (_, r) = apgd_solve(&p, &cfg).unwrap();
            assert!(r.final_objective <= last + 1e-12, "iteration {k}");
            last = r.final_objective;
        }
    }
}
