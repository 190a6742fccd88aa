use super::linop::{norm, LinearOperator};
use super::Problem;
use crate::error::{Error, Result};

/// Norm of the smallest subgradient of the objective at `s`, for a
/// weighted-ℓ1 potential.
///
/// Coefficients of `Tᵀ s` with magnitude at most `1e-6·max(1, ‖Tᵀs‖_∞)`
/// count as zero. See [`check_optimality_with`].
pub fn check_optimality(p: &Problem, s: &[f64]) -> Result<f64> {
    let z = p.analyze(s);
    let scale = z.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    check_optimality_with(p, s, 1e-6 * scale)
}

/// Like [`check_optimality`] with an explicit zero threshold.
///
/// The subdifferential at `s` is `Hᵀ(Hs − y) + T ξ` where `ξ_i = w_i sign(z_i)`
/// on the support of `z = Tᵀ s` and `|ξ_i| ≤ w_i` elsewhere. The free part
/// of `ξ` is chosen by projected accelerated gradient on the box, so the
/// returned value is an upper bound on the exact distance from 0 to the
/// subdifferential that is tight up to the inner solver accuracy.
pub fn check_optimality_with(p: &Problem, s: &[f64], zero_tol: f64) -> Result<f64> {
    if s.len() != p.image_len() {
        return Err(Error::dims(p.image_len(), s.len(), "candidate image"));
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::invalid(format!("zero threshold must be ≥ 0, got {zero_tol}")));
    }
    let weights = p.l1_weights()?;
    let op = p.analysis_op();
    let z = op.apply(s);

    let mut xi = vec![0.0; z.len()];
    let mut free = vec![false; z.len()];
    for i in 0..z.len() {
        if z[i].abs() <= zero_tol {
            free[i] = true;
        } else {
            xi[i] = weights[i] * z[i].signum();
        }
    }
    let mut r = p.model.normal(s)?;
    let hty = p.model.adjoint(&p.y)?;
    r.iter_mut().zip(&hty).for_each(|(a, b)| *a -= b);
    let fixed = op.adjoint(&xi);
    r.iter_mut().zip(&fixed).for_each(|(a, b)| *a += b);

    let free_idx: Vec<usize> = (0..z.len()).filter(|&i| free[i] && weights[i] > 0.0).collect();
    if free_idx.is_empty() {
        return Ok(norm(&r));
    }
    // min over the box of ½‖r + T E ξ‖²; ‖T‖ = 1 so a unit step is safe.
    let residual = |x: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; z.len()];
        for (k, &i) in free_idx.iter().enumerate() {
            full[i] = x[k];
        }
        let mut v = op.adjoint(&full);
        v.iter_mut().zip(&r).for_each(|(a, b)| *a += b);
        v
    };
    let clip = |x: &mut [f64]| {
        for (k, &i) in free_idx.iter().enumerate() {
            x[k] = x[k].clamp(-weights[i], weights[i]);
        }
    };
    let tr = op.apply(&r);
    let mut x: Vec<f64> = free_idx.iter().map(|&i| -tr[i]).collect();
    clip(&mut x);
    let mut best = norm(&residual(&x));
    let mut prev = x.clone();
    let mut t = 1.0f64;
    for _ in 0..2000 {
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        t = t_next;
        let v: Vec<f64> = x.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
        let g = op.apply(&residual(&v));
        let mut next: Vec<f64> = v.iter().zip(&free_idx).map(|(a, &i)| a - g[i]).collect();
        clip(&mut next);
        let val = norm(&residual(&next));
        if val > best {
            t = 1.0;
        }
        let step = super::linop::dist(&next, &x);
        prev = std::mem::replace(&mut x, next);
        best = best.min(val);
        if step <= 1e-14 * (1.0 + norm(&x)) {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ForwardModel;
    use crate::operators::{SeparablePotential, TightFrame};

    fn scalar(y: f64) -> Problem {
        Problem::new(
            ForwardModel::identity(1, 1),
            vec![y],
            TightFrame::identity(),
            SeparablePotential::weighted_l1(vec![1.0]).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn scalar_residuals() {
        let p = scalar(3.0);
        assert!(check_optimality(&p, &[2.0]).unwrap() < 1e-12);
        assert!((check_optimality(&p, &[2.5]).unwrap() - 0.5).abs() < 1e-12);
        // at zero the subgradient −3 + [−1, 1] has distance 2 from the origin
        assert!((check_optimality(&p, &[0.0]).unwrap() - 2.0).abs() < 1e-9);
        assert!(check_optimality(&scalar(0.5), &[0.0]).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_huber() {
        let p = Problem::new(
            ForwardModel::identity(1, 1),
            vec![1.0],
            TightFrame::identity(),
            SeparablePotential::huber(vec![1.0], 0.1).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(matches!(check_optimality(&p, &[1.0]), Err(Error::Unsupported(_))));
    }
}
