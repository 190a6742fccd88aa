//! The ℓ1/ℓ∞ pair and the limits of the weighted-ℓ1 family.
//!
//! The binary matrix `B_d` of sign-canonical `±1` vectors represents ℓ1 as an
//! analysis norm and ℓ∞ as a synthesis norm. The reverse question, whether
//! ℓ∞ itself can be written as `‖Lx‖₁`, has a positive answer in the plane
//! and a negative one from `d = 3` on; [`fit_l1_to_linf`] measures how close
//! a best fit gets.

use super::{dot, FacetMatrix, RegularizationOperator, VertexDictionary};
use crate::error::{Error, Result};
use crate::lp::{self, LpStatus, SimplexOptions};
use crate::rng::SeededRng;
use nalgebra::DMatrix;

/// Largest dimension accepted by [`l1_linf_witness`] (`2^{d−1}` columns).
pub const MAX_WITNESS_DIM: usize = 12;

/// `B_d` as both a facet matrix (ℓ1 = ‖B_dᵀx‖_∞) and a vertex dictionary
/// (ℓ∞ = min ‖z‖₁ s.t. B_d z = x).
pub fn l1_linf_witness(d: usize) -> Result<(FacetMatrix, VertexDictionary)> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if d > MAX_WITNESS_DIM {
        return Err(Error::invalid(format!(
            "d = {d} exceeds {MAX_WITNESS_DIM} (2^(d-1) columns)"
        )));
    }
    let n = 1usize << (d - 1);
    let m = DMatrix::from_fn(d, n, |i, j| {
        if i == 0 {
            1.0
        } else if (j >> (d - 1 - i)) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    });
    Ok((FacetMatrix::new(m.clone())?, VertexDictionary::new(m)?))
}

/// Result of fitting `‖Lx‖₁` to `‖x‖_∞`.
#[derive(Clone, Debug)]
pub struct LinfFit {
    pub operator: RegularizationOperator,
    /// `max_k |‖L x_k‖₁ − ‖x_k‖_∞| / ‖x_k‖_∞` over the fit samples.
    pub max_rel_deviation: f64,
    /// Deviation after the fixed-direction stage, before alternating updates.
    pub initial_deviation: f64,
    pub alternating_steps: usize,
}

fn hemisphere_directions(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0]; n.min(1)],
        2 => (0..n)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    let mut v = vec![0.0; d];
                    v[0] = r * phi.cos();
                    v[1] = r * phi.sin();
                    v[2] = z;
                    v
                })
                .collect()
        }
    }
}

fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn max_deviation(rows: &[Vec<f64>], samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .map(|x| {
            let v: f64 = rows.iter().map(|u| dot(u, x).abs()).sum();
            (v - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves `min_w max_k |(Φw)_k − 1|` by constraint generation: the LP is
/// solved on an active subset of rows, the worst violators over all rows are
/// added, and the loop stops once no row exceeds the subset optimum.
fn minimax_fit(phi: &DMatrix<f64>, nonneg: bool) -> Result<Vec<f64>> {
    let k = phi.nrows();
    let stride = (k / 64).max(1);
    let mut active: Vec<usize> = (0..k).step_by(stride).collect();
    let mut in_set = vec![false; k];
    active.iter().for_each(|&r| in_set[r] = true);
    loop {
        let sub = phi.select_rows(active.iter());
        let w = minimax_fit_dense(&sub, nonneg)?;
        let dev = |r: usize| ((0..w.len()).map(|j| phi[(r, j)] * w[j]).sum::<f64>() - 1.0).abs();
        let level = active.iter().map(|&r| dev(r)).fold(0.0, f64::max);
        let mut worst: Vec<(f64, usize)> = (0..k)
            .filter(|&r| !in_set[r])
            .map(|r| (dev(r), r))
            .filter(|(e, _)| *e > level * (1.0 + 1e-9) + 1e-12)
            .collect();
        if worst.is_empty() {
            return Ok(w);
        }
        worst.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, r) in worst.iter().take(32) {
            in_set[r] = true;
            active.push(r);
        }
    }
}

/// Dense LP for the minimax fit, posed as its dual so the tableau has one
/// row per unknown. With `nonneg` the unknowns are constrained to `w ≥ 0`.
fn minimax_fit_dense(phi: &DMatrix<f64>, nonneg: bool) -> Result<Vec<f64>> {
    let (k, n) = phi.shape();
    let extra = if nonneg { n } else { 0 };
    let cols = 2 * k + extra;
    let mut a = DMatrix::zeros(n + 1, cols);
    for r in 0..n {
        for s in 0..k {
            a[(r, s)] = -phi[(s, r)];
            a[(r, k + s)] = phi[(s, r)];
        }
        if nonneg {
            a[(r, 2 * k + r)] = 1.0;
        }
    }
    for s in 0..2 * k {
        a[(n, s)] = 1.0;
    }
    let mut b = vec![0.0; n + 1];
    b[n] = 1.0;
    let mut c = vec![0.0; cols];
    c[..k].iter_mut().for_each(|v| *v = 1.0);
    c[k..2 * k].iter_mut().for_each(|v| *v = -1.0);
    let sol = lp::solve(&a, &b, &c, &SimplexOptions::default());
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible(format!(
            "minimax fit LP ended with {:?}",
            sol.status
        )));
    }
    Ok(sol.duals[..n]
        .iter()
        .map(|y| if nonneg { (-y).max(0.0) } else { -y })
        .collect())
}

/// Best fit of `‖x‖_∞` by `‖Lx‖₁` with `n_rows` rows, in the minimax sense on
/// `n_samples` seeded points of the ℓ∞ unit sphere.
///
/// Stage one fixes the row directions on a hemisphere grid and solves for
/// their lengths exactly. Stage two alternates: freeze the sign pattern
/// `sign(⟨u_n, x_k⟩)`, under which the fit is linear in `L`, solve that
/// minimax program and accept the step (with halving) only if the true
/// deviation drops.
pub fn fit_l1_to_linf(
    d: usize,
    n_rows: usize,
    n_samples: usize,
    seed: u64,
    alternating_steps: usize,
) -> Result<LinfFit> {
    if d == 0 || n_rows == 0 || n_samples == 0 {
        return Err(Error::invalid("d, n_rows and n_samples must be positive"));
    }
    if d > 3 {
        return Err(Error::Unsupported(
            "ℓ∞ fitting is only set up for d ≤ 3".into(),
        ));
    }
    let mut rng = SeededRng::new(seed);
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| {
            let x = rng.unit_vector(d);
            let s = linf(&x);
            x.into_iter().map(|v| v / s).collect()
        })
        .collect();

    let dirs = hemisphere_directions(d, n_rows);
    let phi = DMatrix::from_fn(n_samples, dirs.len(), |k, n| dot(&dirs[n], &samples[k]).abs());
    let lengths = minimax_fit(&phi, true)?;
    let mut rows: Vec<Vec<f64>> = dirs
        .iter()
        .zip(&lengths)
        .map(|(w, a)| w.iter().map(|v| v * a).collect())
        .collect();
    let initial = max_deviation(&rows, &samples);
    let mut best = initial;
    let mut steps = 0;

    for _ in 0..alternating_steps {
        if best <= 1e-12 {
            break;
        }
        let nr = rows.len();
        let signs: Vec<Vec<f64>> = samples
            .iter()
            .map(|x| rows.iter().map(|u| dot(u, x).signum()).collect())
            .collect();
        let phi = DMatrix::from_fn(n_samples, nr * d, |k, col| {
            let (n, i) = (col / d, col % d);
            signs[k][n] * samples[k][i]
        });
        let Ok(flat) = minimax_fit(&phi, false) else {
            break;
        };
        let target: Vec<Vec<f64>> = (0..nr).map(|n| flat[n * d..(n + 1) * d].to_vec()).collect();
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-3 {
            let trial: Vec<Vec<f64>> = rows
                .iter()
                .zip(&target)
                .map(|(u, t)| u.iter().zip(t).map(|(a, b)| a + step * (b - a)).collect())
                .collect();
            let dev = max_deviation(&trial, &samples);
            if dev < best * (1.0 - 1e-9) {
                rows = trial;
                best = dev;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        steps += 1;
    }

    Ok(LinfFit {
        operator: RegularizationOperator::from_rows(&rows)?,
        max_rel_deviation: best,
        initial_deviation: initial,
        alternating_steps: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{analysis_norm, synthesis_norm};

    #[test]
    fn witness_d1_and_d2() {
        let (f, _) = l1_linf_witness(1).unwrap();
        assert_eq!(f.columns(), vec![vec![1.0]]);
        let (f, v) = l1_linf_witness(2).unwrap();
        assert_eq!(f.columns(), vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn witness_d3_gives_l1() {
        let (f, _) = l1_linf_witness(3).unwrap();
        assert_eq!(f.len(), 4);
        let mut rng = SeededRng::new(17);
        for _ in 0..1000 {
            let x = rng.normal_vec(3);
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            assert!((analysis_norm(&f, &x).unwrap() - l1).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_synthesis_is_linf() {
        let (_, v) = l1_linf_witness(4).unwrap();
        let mut rng = SeededRng::new(2);
        for _ in 0..100 {
            let x = rng.normal_vec(4);
            let (s, _) = synthesis_norm(&v, &x).unwrap();
            assert!((s - linf(&x)).abs() < 1e-9);
        }
    }

    #[test]
    fn witness_too_large() {
        assert!(l1_linf_witness(13).is_err());
        assert!(l1_linf_witness(0).is_err());
    }

    #[test]
    fn planar_fit_is_exact() {
        let fit = fit_l1_to_linf(2, 8, 400, 1, 0).unwrap();
        assert!(fit.max_rel_deviation < 1e-9, "{}", fit.max_rel_deviation);
    }
}
