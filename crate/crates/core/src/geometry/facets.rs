use super::{numerical_rank, FacetMatrix, VertexDictionary};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

const HULL_EPS: f64 = 1e-10;
const FACET_MERGE_TOL: f64 = 1e-8;

/// Facet description `{x : |⟨f_m, x⟩| ≤ 1}` of the ball `Conv{±v_n}`.
///
/// `d = 2` walks the hull of the signed vertices in angular order and solves
/// `⟨f, v_k⟩ = ⟨f, v_{k+1}⟩ = 1` per edge; `d = 3` builds the hull
/// incrementally and scales each facet plane to offset 1. Only one vector of
/// each `±f` pair is returned, sign-canonicalized.
pub fn facets_from_vertices(v: &VertexDictionary) -> Result<FacetMatrix> {
    let d = v.dim();
    if d > 3 {
        return Err(Error::Unsupported(format!(
            "explicit facet enumeration is limited to d ≤ 3 (got d = {d})"
        )));
    }
    if v.is_empty() || numerical_rank(v.matrix()) < d {
        return Err(Error::Rank(format!(
            "vertex set does not span R^{d}; the hull is degenerate"
        )));
    }
    let mut points = Vec::with_capacity(2 * v.len());
    for c in v.columns() {
        points.push(c.iter().map(|x| -x).collect::<Vec<f64>>());
        points.push(c);
    }
    let raw = match d {
        1 => {
            let r = points.iter().fold(0.0f64, |m, p| m.max(p[0].abs()));
            vec![vec![1.0 / r]]
        }
        2 => facets_2d(&points)?,
        _ => facets_3d(&points)?,
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut f in raw {
        if let Some(lead) = f.iter().find(|x| x.abs() > 1e-12).copied() {
            if lead < 0.0 {
                f.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let dup = out.iter().any(|o| {
            o.iter().zip(&f).all(|(a, b)| (a - b).abs() <= FACET_MERGE_TOL * scale)
        });
        if !dup {
            out.push(f);
        }
    }
    FacetMatrix::new(DMatrix::from_fn(d, out.len(), |i, j| out[j][i]))
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn facets_2d(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|p, q| {
        p[0].partial_cmp(&q[0])
            .unwrap()
            .then(p[1].partial_cmp(&q[1]).unwrap())
    });
    let scale = pts
        .iter()
        .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let eps = HULL_EPS * scale * scale;
    // Monotone chain; strict turns only, so collinear edge points drop out.
    let mut hull: Vec<&Vec<f64>> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &&Vec<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::Rank("collinear vertex set".into()));
    }
    let n = hull.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (p, q) = (hull[k], hull[(k + 1) % n]);
        let det = p[0] * q[1] - p[1] * q[0];
        if det.abs() <= eps {
            return Err(Error::Rank("edge passes through the origin".into()));
        }
        out.push(vec![(q[1] - p[1]) / det, (p[0] - q[0]) / det]);
    }
    Ok(out)
}

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Copy)]
struct Face {
    v: [usize; 3],
    normal: P3,
    offset: f64,
    alive: bool,
}

fn make_face(p: &[P3], a: usize, b: usize, c: usize, interior: P3) -> Option<Face> {
    let n = cross(sub(p[b], p[a]), sub(p[c], p[a]));
    let len = dot3(n, n).sqrt();
    if len == 0.0 {
        return None;
    }
    let mut n = [n[0] / len, n[1] / len, n[2] / len];
    let mut v = [a, b, c];
    if dot3(n, sub(interior, p[a])) > 0.0 {
        n = [-n[0], -n[1], -n[2]];
        v = [a, c, b];
    }
    Some(Face {
        v,
        normal: n,
        offset: dot3(n, p[a]),
        alive: true,
    })
}

fn facets_3d(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let p: Vec<P3> = points.iter().map(|q| [q[0], q[1], q[2]]).collect();
    let scale = p
        .iter()
        .fold(0.0f64, |m, q| m.max(q[0].abs()).max(q[1].abs()).max(q[2].abs()));
    let eps = HULL_EPS * scale.max(1e-300);
    let degenerate = || Error::Rank("coplanar vertex set".into());

    // Initial tetrahedron: farthest-point construction.
    let i0 = 0;
    let i1 = (0..p.len())
        .max_by(|&a, &b| {
            let da = sub(p[a], p[i0]);
            let db = sub(p[b], p[i0]);
            dot3(da, da).partial_cmp(&dot3(db, db)).unwrap()
        })
        .ok_or_else(degenerate)?;
    let e = sub(p[i1], p[i0]);
    let i2 = (0..p.len())
        .max_by(|&a, &b| {
            let ca = cross(e, sub(p[a], p[i0]));
            let cb = cross(e, sub(p[b], p[i0]));
            dot3(ca, ca).partial_cmp(&dot3(cb, cb)).unwrap()
        })
        .ok_or_else(degenerate)?;
    let nrm = cross(e, sub(p[i2], p[i0]));
    let i3 = (0..p.len())
        .max_by(|&a, &b| {
            dot3(nrm, sub(p[a], p[i0]))
                .abs()
                .partial_cmp(&dot3(nrm, sub(p[b], p[i0])).abs())
                .unwrap()
        })
        .ok_or_else(degenerate)?;
    let vol = dot3(nrm, sub(p[i3], p[i0])).abs();
    if vol <= eps * scale * scale {
        return Err(degenerate());
    }
    let interior = {
        let s = [p[i0], p[i1], p[i2], p[i3]];
        [
            (s[0][0] + s[1][0] + s[2][0] + s[3][0]) / 4.0,
            (s[0][1] + s[1][1] + s[2][1] + s[3][1]) / 4.0,
            (s[0][2] + s[1][2] + s[2][2] + s[3][2]) / 4.0,
        ]
    };
    let mut faces: Vec<Face> = [
        (i0, i1, i2),
        (i0, i1, i3),
        (i0, i2, i3),
        (i1, i2, i3),
    ]
    .iter()
    .map(|&(a, b, c)| make_face(&p, a, b, c, interior).ok_or_else(degenerate))
    .collect::<Result<_>>()?;

    for (idx, &q) in p.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&idx) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && dot3(f.normal, q) - f.offset > eps)
            .map(|(k, _)| k)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &k in &visible {
            let v = faces[k].v;
            edges.extend([(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]);
        }
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(a, b)| !edges.contains(&(b, a)))
            .copied()
            .collect();
        for &k in &visible {
            faces[k].alive = false;
        }
        for (a, b) in horizon {
            if let Some(f) = make_face(&p, a, b, idx, interior) {
                faces.push(f);
            }
        }
    }

    let mut out = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        if f.offset <= eps {
            return Err(Error::Rank(
                "origin is not interior to the symmetric hull".into(),
            ));
        }
        out.push(f.normal.iter().map(|x| x / f.offset).collect());
    }
    Ok(out)
}
