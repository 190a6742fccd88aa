use super::{dot, FacetMatrix, RegularizationOperator, VertexDictionary};
use crate::error::{Error, Result};
use crate::lp::{self, LpStatus, SimplexOptions};
use nalgebra::DMatrix;

/// A norm on `R^d` that can be evaluated pointwise.
pub trait Norm: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

fn check_len(expected: usize, x: &[f64], context: &'static str) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::dims(expected, x.len(), context))
    }
}

fn is_zero(x: &[f64]) -> bool {
    x.iter().all(|&v| v == 0.0)
}

/// `‖Fᵀx‖_∞ = max_m |⟨f_m, x⟩|`.
pub fn analysis_norm(f: &FacetMatrix, x: &[f64]) -> Result<f64> {
    check_len(f.dim(), x, "analysis_norm")?;
    let m = f.matrix();
    Ok((0..m.ncols())
        .map(|j| m.column(j).iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

/// `‖Lx‖₁ = Σ_n |⟨u_n, x⟩|`.
pub fn weighted_l1_norm(l: &RegularizationOperator, x: &[f64]) -> Result<f64> {
    check_len(l.dim(), x, "weighted_l1_norm")?;
    let m = l.matrix();
    Ok((0..m.nrows())
        .map(|i| m.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
        .sum())
}

/// Atomic norm `min ‖z‖₁ s.t. Vz = x`, returning the value and one optimal
/// code `z`.
pub fn synthesis_norm(v: &VertexDictionary, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(v.dim(), x, "synthesis_norm")?;
    let n = v.len();
    if is_zero(x) {
        return Ok((0.0, vec![0.0; n]));
    }
    v.require_full_rank()?;
    let d = v.dim();
    let g = v.matrix();
    // z = z⁺ − z⁻ with both parts nonnegative.
    let a = DMatrix::from_fn(d, 2 * n, |i, j| if j < n { g[(i, j)] } else { -g[(i, j - n)] });
    let c = vec![1.0; 2 * n];
    let sol = lp::solve(&a, x, &c, &SimplexOptions::default());
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Rank(
                "x is not in the span of the dictionary".to_string(),
            ))
        }
        other => return Err(Error::Infeasible(format!("synthesis LP ended with {other:?}"))),
    }
    let z: Vec<f64> = (0..n).map(|j| sol.x[j] - sol.x[j + n]).collect();
    let value = z.iter().map(|v| v.abs()).sum();
    Ok((value, z))
}

/// Gauge of the zonotope `Σ[−u_n, u_n]`: `min ‖t‖_∞ s.t. Lᵀt = y`.
pub fn zonotope_gauge(l: &RegularizationOperator, y: &[f64]) -> Result<f64> {
    check_len(l.dim(), y, "zonotope_gauge")?;
    if is_zero(y) {
        return Ok(0.0);
    }
    let (n, d) = l.matrix().shape();
    let u = l.matrix();
    // Columns: t⁺ (n) | t⁻ (n) | τ | slack (n).
    // Rows: Lᵀ(t⁺ − t⁻) = y (d rows); t⁺_k + t⁻_k − τ + s_k = 0 (n rows).
    let cols = 3 * n + 1;
    let mut a = DMatrix::zeros(d + n, cols);
    for i in 0..d {
        for k in 0..n {
            a[(i, k)] = u[(k, i)];
            a[(i, n + k)] = -u[(k, i)];
        }
    }
    for k in 0..n {
        let r = d + k;
        a[(r, k)] = 1.0;
        a[(r, n + k)] = 1.0;
        a[(r, 2 * n)] = -1.0;
        a[(r, 2 * n + 1 + k)] = 1.0;
    }
    let mut b = y.to_vec();
    b.extend(std::iter::repeat_n(0.0, n));
    let mut c = vec![0.0; cols];
    c[2 * n] = 1.0;
    let sol = lp::solve(&a, &b, &c, &SimplexOptions::default());
    match sol.status {
        LpStatus::Optimal => Ok(sol.x[2 * n]),
        LpStatus::Infeasible => Err(Error::Infeasible(
            "y is not in the range of Lᵀ".to_string(),
        )),
        other => Err(Error::Infeasible(format!("zonotope LP ended with {other:?}"))),
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisNorm(pub FacetMatrix);

impl Norm for AnalysisNorm {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        analysis_norm(&self.0, x)
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisNorm(pub VertexDictionary);

impl Norm for SynthesisNorm {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        synthesis_norm(&self.0, x).map(|(v, _)| v)
    }
}

#[derive(Clone, Debug)]
pub struct WeightedL1Norm(pub RegularizationOperator);

impl Norm for WeightedL1Norm {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        weighted_l1_norm(&self.0, x)
    }
}

#[derive(Clone, Debug)]
pub struct ZonotopeGauge(pub RegularizationOperator);

impl Norm for ZonotopeGauge {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        zonotope_gauge(&self.0, x)
    }
}

/// The ℓp norm; `p = f64::INFINITY` gives the max norm.
#[derive(Clone, Copy, Debug)]
pub struct LpNorm {
    pub d: usize,
    pub p: f64,
}

impl LpNorm {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("ℓp needs p ≥ 1, got {p}")));
        }
        Ok(Self { d, p })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        if self.p.is_infinite() {
            x.iter().fold(0.0, |m, v| m.max(v.abs()))
        } else if self.p == 1.0 {
            x.iter().map(|v| v.abs()).sum()
        } else if self.p == 2.0 {
            dot(x, x).sqrt()
        } else {
            x.iter().map(|v| v.abs().powf(self.p)).sum::<f64>().powf(1.0 / self.p)
        }
    }
}

impl Norm for LpNorm {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_len(self.d, x, "lp norm")?;
        Ok(self.value(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn facets(cols: &[Vec<f64>]) -> FacetMatrix {
        FacetMatrix::from_columns(cols).unwrap()
    }

    fn dict(cols: &[Vec<f64>]) -> VertexDictionary {
        VertexDictionary::from_columns(cols).unwrap()
    }

    #[test]
    fn analysis_identity_is_linf() {
        let f = facets(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(analysis_norm(&f, &[3.0, -4.0]).unwrap(), 4.0);
    }

    #[test]
    fn analysis_hypercube_facets_give_l1() {
        let f = facets(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert_eq!(analysis_norm(&f, &[3.0, -4.0]).unwrap(), 7.0);
    }

    #[test]
    fn analysis_dimension_mismatch() {
        let f = facets(&[vec![1.0, 0.0]]);
        assert!(matches!(
            analysis_norm(&f, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hexagon_analysis_norm() {
        // Hexagon with vertices at radius 1/√3 and angles k·60°; facets are the
        // edge normals computed from neighbouring vertex pairs.
        let r = 1.0 / 3f64.sqrt();
        let verts: Vec<[f64; 2]> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let mut cols = Vec::new();
        for k in 0..3 {
            let (p, q) = (verts[k], verts[k + 1]);
            // Solve ⟨f,p⟩ = ⟨f,q⟩ = 1.
            let det = p[0] * q[1] - p[1] * q[0];
            cols.push(vec![(q[1] - p[1]) / det, (p[0] - q[0]) / det]);
        }
        let f = facets(&cols);
        let v = analysis_norm(&f, &[r, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // Brute-force gauge: the ray along x hits the boundary exactly at the vertex.
        let bf = brute_force_polygon_gauge(&verts, [r, 0.0]);
        assert!((v - bf).abs() < 1e-6);
    }

    /// Gauge of a convex polygon from its boundary sampled densely along edges.
    fn brute_force_polygon_gauge(verts: &[[f64; 2]], x: [f64; 2]) -> f64 {
        let theta = x[1].atan2(x[0]);
        let (c, s) = (theta.cos(), theta.sin());
        let n = verts.len();
        let mut best_r = 0.0f64;
        let mut best_err = f64::INFINITY;
        for k in 0..n {
            let (p, q) = (verts[k], verts[(k + 1) % n]);
            for i in 0..=20000 {
                let t = i as f64 / 20000.0;
                let b = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                let rb = (b[0] * b[0] + b[1] * b[1]).sqrt();
                let err = (b[0] / rb - c).abs() + (b[1] / rb - s).abs();
                if err < best_err {
                    best_err = err;
                    best_r = rb;
                }
            }
        }
        (x[0] * x[0] + x[1] * x[1]).sqrt() / best_r
    }

    #[test]
    fn weighted_l1_examples() {
        let l = RegularizationOperator::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(weighted_l1_norm(&l, &[1.0, -2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(weighted_l1_norm(&l, &[0.0; 3]).unwrap(), 0.0);

        let h = 3f64.sqrt() / 2.0;
        let l = RegularizationOperator::from_rows(&[
            vec![0.0, 1.0],
            vec![-h, -0.5],
            vec![h, -0.5],
        ])
        .unwrap();
        let v = weighted_l1_norm(&l, &[1.0, 0.0]).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn synthesis_identity_is_l1() {
        let v = dict(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let (val, z) = synthesis_norm(&v, &[1.5, -2.0, 0.25]).unwrap();
        assert!((val - 3.75).abs() < 1e-12);
        assert!((z[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn synthesis_hypercube_vertices_give_linf() {
        let v = dict(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        let (val, z) = synthesis_norm(&v, &[3.0, -4.0]).unwrap();
        assert!((val - 4.0).abs() < 1e-12);
        assert!((z[0] + z[1] - 3.0).abs() < 1e-12);
        assert!((z[0] - z[1] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn synthesis_hexagon_matches_grid_oracle() {
        let r = 1.0 / 3f64.sqrt();
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                vec![r * a.cos(), r * a.sin()]
            })
            .collect();
        let v = dict(&cols);
        let x = [r, 0.0];
        let (val, _) = synthesis_norm(&v, &x).unwrap();
        assert!((val - 1.0).abs() < 1e-12);
        // Oracle: parametrize z by z₂ on a grid; z₀, z₁ then follow from Vz = x.
        let mut best = f64::INFINITY;
        for i in -4000..=4000 {
            let z2 = i as f64 * 5e-4;
            // Columns: (r,0), (r/2, r√3/2), (−r/2, r√3/2).
            let z1 = -z2; // second coordinate forces z1 + z2 = 0
            let z0 = (x[0] - r / 2.0 * z1 + r / 2.0 * z2) / r;
            best = best.min(z0.abs() + z1.abs() + z2.abs());
        }
        assert!((val - best).abs() < 1e-6);
    }

    #[test]
    fn synthesis_rank_deficient_errors() {
        let v = dict(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert!(matches!(synthesis_norm(&v, &[1.0, 1.0]), Err(Error::Rank(_))));
    }

    #[test]
    fn zonotope_examples() {
        let l = RegularizationOperator::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((zonotope_gauge(&l, &[3.0, -4.0]).unwrap() - 4.0).abs() < 1e-12);
        let l = RegularizationOperator::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!((zonotope_gauge(&l, &[3.0]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zonotope_duality_with_sign_witness() {
        let mut rng = SeededRng::new(11);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..3).map(|_| rng.normal_vec(2)).collect();
            let l = RegularizationOperator::from_rows(&rows).unwrap();
            let x = rng.normal_vec(2);
            let y = rng.normal_vec(2);
            let lhs = dot(&x, &y).abs();
            let rhs = weighted_l1_norm(&l, &x).unwrap() * zonotope_gauge(&l, &y).unwrap();
            assert!(lhs <= rhs + 1e-9);
            // Witness y* = Lᵀ sign(Lx) has gauge ≤ 1 and attains ⟨x, y*⟩ = ‖Lx‖₁.
            let t: Vec<f64> = rows.iter().map(|u| dot(u, &x).signum()).collect();
            let ystar: Vec<f64> = (0..2)
                .map(|i| rows.iter().zip(&t).map(|(u, s)| u[i] * s).sum())
                .collect();
            let g = zonotope_gauge(&l, &ystar).unwrap();
            let l1 = weighted_l1_norm(&l, &x).unwrap();
            assert!((dot(&x, &ystar) - l1 * g).abs() < 1e-8);
        }
    }

    #[test]
    fn zonotope_rank_deficient_infeasible() {
        let l = RegularizationOperator::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(
            zonotope_gauge(&l, &[0.0, 1.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn lp_norm_values() {
        let x = [3.0, -4.0];
        assert_eq!(LpNorm::new(2, 1.0).unwrap().value(&x), 7.0);
        assert_eq!(LpNorm::new(2, 2.0).unwrap().value(&x), 5.0);
        assert_eq!(LpNorm::new(2, f64::INFINITY).unwrap().value(&x), 4.0);
        assert!(LpNorm::new(2, 0.5).is_err());
    }
}
