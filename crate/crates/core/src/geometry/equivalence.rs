use super::{extreme_points, LpNorm, Norm, VertexDictionary};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

/// Equivalence constants `c0 ‖x‖_b ≤ ‖x‖_a ≤ C0 ‖x‖_b` estimated on sampled
/// directions, with `epsilon = max(C0 − 1, 1 − c0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalenceReport {
    pub c0: f64,
    #[serde(rename = "C0")]
    pub c0_upper: f64,
    pub epsilon: f64,
    pub n_samples: usize,
}

/// Probes `n_samples` seeded uniform directions on the unit sphere and reports
/// the extreme ratios `norm_a / norm_b`.
pub fn measure_equivalence(
    norm_a: &dyn Norm,
    norm_b: &dyn Norm,
    n_samples: usize,
    seed: u64,
) -> Result<NormEquivalenceReport> {
    let d = norm_a.dim();
    if norm_b.dim() != d {
        return Err(Error::dims(d, norm_b.dim(), "measure_equivalence"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be positive"));
    }
    let mut rng = SeededRng::new(seed);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..n_samples {
        let x = rng.unit_vector(d);
        let a = norm_a.eval(&x)?;
        let b = norm_b.eval(&x)?;
        if !(a > 1e-300) || !(b > 1e-300) {
            return Err(Error::NotANorm(format!(
                "zero value on nonzero probe {x:?} (a = {a}, b = {b})"
            )));
        }
        let r = a / b;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(NormEquivalenceReport {
        c0: lo,
        c0_upper: hi,
        epsilon: (hi - 1.0).max(1.0 - lo),
        n_samples,
    })
}

/// Unit ball to approximate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "p")]
pub enum BallTarget {
    L2,
    Lp(f64),
}

impl BallTarget {
    pub fn norm(&self, d: usize) -> Result<LpNorm> {
        match *self {
            BallTarget::L2 => LpNorm::new(d, 2.0),
            BallTarget::Lp(p) => LpNorm::new(d, p),
        }
    }
}

/// Inscribes a polytope with `n_vertex_pairs` vertex pairs in the target ball.
///
/// In the plane the vertices sit at equal angles `kπ/n`; in 3-D the
/// directions follow a golden-angle spiral over the upper hemisphere. Each
/// direction is scaled onto the target boundary and the result is reduced to
/// its extreme points, which only removes columns for non-strictly convex
/// targets such as ℓ1.
pub fn approximate_ball(
    d: usize,
    n_vertex_pairs: usize,
    target: BallTarget,
    _seed: u64,
) -> Result<VertexDictionary> {
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!(
            "ball approximation supports d ∈ {{2, 3}}, got {d}"
        )));
    }
    if n_vertex_pairs < d {
        return Err(Error::Rank(format!(
            "{n_vertex_pairs} vertex pairs cannot span R^{d}"
        )));
    }
    let norm = target.norm(d)?;
    let n = n_vertex_pairs;
    let dirs: Vec<Vec<f64>> = if d == 2 {
        (0..n)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - (k as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    };
    let cols: Vec<Vec<f64>> = dirs
        .into_iter()
        .map(|w| {
            let s = norm.value(&w);
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let v = VertexDictionary::from_columns(&cols)?;
    extreme_points(&v, 1e-12)
}

/// Analytic `ε` of a regular polygon with `n` vertex pairs inscribed in the
/// Euclidean disk: `sec(π / 2n) − 1`.
pub fn polygon_epsilon(n_vertex_pairs: usize) -> f64 {
    1.0 / (std::f64::consts::PI / (2.0 * n_vertex_pairs as f64)).cos() - 1.0
}
