use super::{norm2, VertexDictionary};
use crate::error::{Error, Result};
use crate::lp::{self, SimplexOptions};
use nalgebra::DMatrix;

const SIGN_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-10;

/// Sign-canonicalizes the columns (first entry with magnitude above 1e-12 made
/// positive), drops zero columns and merges duplicates up to sign.
pub fn canonicalize_columns(g: &VertexDictionary) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut col in g.columns() {
        let Some(lead) = col.iter().find(|v| v.abs() > SIGN_TOL).copied() else {
            continue;
        };
        if lead < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        let dup = out.iter().any(|o| {
            let minus: Vec<f64> = o.iter().zip(&col).map(|(a, b)| a - b).collect();
            let plus: Vec<f64> = o.iter().zip(&col).map(|(a, b)| a + b).collect();
            norm2(&minus) <= MERGE_TOL || norm2(&plus) <= MERGE_TOL
        });
        if !dup {
            out.push(col);
        }
    }
    out
}

/// Reduces a dictionary to the extreme points of `Conv{±g_n}`.
///
/// Column `g_j` is kept iff the program `λ ≥ 0, Σλ = 1, Σ λ_i (±g_i) = g_j`
/// over the other canonical columns is infeasible (residual above `tol`).
pub fn extreme_points(g: &VertexDictionary, tol: f64) -> Result<VertexDictionary> {
    if g.is_empty() {
        return Err(Error::EmptyInput("dictionary has no columns"));
    }
    let d = g.dim();
    let cols = canonicalize_columns(g);
    if cols.is_empty() {
        return Err(Error::EmptyInput("dictionary has only zero columns"));
    }
    let opts = SimplexOptions {
        feasibility_tol: tol,
        ..SimplexOptions::default()
    };
    let mut kept = Vec::new();
    for (j, target) in cols.iter().enumerate() {
        let others: Vec<&Vec<f64>> = cols
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, c)| c)
            .collect();
        if others.is_empty() {
            kept.push(target.clone());
            continue;
        }
        let m = others.len();
        let a = DMatrix::from_fn(d + 1, 2 * m, |r, c| {
            if r == d {
                1.0
            } else if c < m {
                others[c][r]
            } else {
                -others[c - m][r]
            }
        });
        let mut b = target.clone();
        b.push(1.0);
        if !lp::is_feasible(&a, &b, &opts) {
            kept.push(target.clone());
        }
    }
    VertexDictionary::from_columns(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict(cols: &[Vec<f64>]) -> VertexDictionary {
        VertexDictionary::from_columns(cols).unwrap()
    }

    #[test]
    fn interior_point_removed() {
        let g = dict(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]);
        let e = extreme_points(&g, 1e-9).unwrap();
        assert_eq!(e.columns(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn signed_duplicate_removed() {
        let g = dict(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]);
        let e = extreme_points(&g, 1e-9).unwrap();
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn hexagon_generators_all_retained() {
        let cols: Vec<Vec<f64>> = [0.0f64, 60.0, 120.0]
            .iter()
            .map(|deg| {
                let a = deg.to_radians();
                vec![a.cos(), a.sin()]
            })
            .collect();
        let e = extreme_points(&dict(&cols), 1e-9).unwrap();
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn canonical_sign_is_positive_leading_entry() {
        let g = dict(&[vec![0.0, -2.0, 1.0]]);
        assert_eq!(canonicalize_columns(&g), vec![vec![0.0, 2.0, -1.0]]);
    }

    #[test]
    fn empty_rejected() {
        let g = VertexDictionary::new(DMatrix::zeros(2, 0)).unwrap();
        assert!(matches!(extreme_points(&g, 1e-9), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn idempotent_on_random_dictionaries() {
        let mut rng = crate::rng::SeededRng::new(5);
        for _ in 0..20 {
            let cols: Vec<Vec<f64>> = (0..7).map(|_| rng.normal_vec(3)).collect();
            let once = extreme_points(&dict(&cols), 1e-9).unwrap();
            let twice = extreme_points(&once, 1e-9).unwrap();
            assert_eq!(once, twice);
        }
    }
}
