//! Dense two-phase primal simplex; Dantzig pricing with Bland's rule as
//! the anti-cycling fallback on degenerate stretches.
//!
//! Solves standard-form programs
//!
//! ```text
//! minimize   cᵀx
//! subject to A x = b,  x ≥ 0
//! ```
//!
//! on a dense tableau. Sizes in this crate stay small (tens of rows, a few
//! thousand columns), so exactness and robustness win over sparsity.
//! After the last pivot the basic solution is recomputed from an LU
//! factorization of the basis to shave off accumulated tableau round-off.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Pivot and reduced-cost tolerance.
    pub optimality_tol: f64,
    /// Phase-one objective below which the program is declared feasible.
    pub feasibility_tol: f64,
    pub max_pivots: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            optimality_tol: 1e-9,
            feasibility_tol: 1e-9,
            max_pivots: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Equality-constraint multipliers `y` with `Aᵀy ≤ c` at optimality.
    pub duals: Vec<f64>,
    pub pivots: usize,
    /// Phase-one residual (sum of artificial variables).
    pub infeasibility: f64,
}

struct Tableau {
    rows: usize,
    width: usize,
    n: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Row alive flag; redundant rows found after phase one are retired.
    alive: Vec<bool>,
    /// Reduced costs over all `n + rows` columns and the current objective.
    cost: Vec<f64>,
    value: f64,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        let inv = 1.0 / p;
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        let f = self.cost[c];
        if f != 0.0 {
            for (x, &y) in self.cost.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            self.cost[c] = 0.0;
            self.value -= f * prow[w - 1];
        }
        self.basis[r] = c;
    }

    /// Pivots over columns `0..allowed` until optimal. Pricing is Dantzig's
    /// most negative reduced cost; after a run of degenerate pivots it falls
    /// back to Bland's rule until the objective moves again, which rules out
    /// cycling.
    fn run(&mut self, allowed: usize, opts: &SimplexOptions, pivots: &mut usize) -> LpStatus {
        const DEGENERATE_RUN: usize = 32;
        let tol = opts.optimality_tol;
        let mut degenerate = 0;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..allowed).find(|&j| self.cost[j] < -tol)
            } else {
                (0..allowed)
                    .filter(|&j| self.cost[j] < -tol)
                    .min_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]))
            };
            let Some(c) = entering else {
                return LpStatus::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if !self.alive[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a > tol {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = ratio <= br + 1e-12;
                            let prefer = if bland {
                                self.basis[i] < self.basis[bi]
                            } else {
                                a > self.at(bi, c)
                            };
                            if ratio < br - 1e-12 || (tie && prefer) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = best else {
                return LpStatus::Unbounded;
            };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            *pivots += 1;
            if *pivots >= opts.max_pivots {
                return LpStatus::IterationLimit;
            }
        }
    }
}

/// Solves `min cᵀx s.t. Ax = b, x ≥ 0`.
pub fn solve(a: &DMatrix<f64>, b: &[f64], c: &[f64], opts: &SimplexOptions) -> LpSolution {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(c.len(), n, "cost length");
    let width = n + m + 1;
    let mut data = vec![0.0; m * width];
    let mut sign = vec![1.0; m];
    for i in 0..m {
        if b[i] < 0.0 {
            sign[i] = -1.0;
        }
        let row = &mut data[i * width..(i + 1) * width];
        for j in 0..n {
            row[j] = sign[i] * a[(i, j)];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign[i] * b[i];
    }
    // Phase one: minimize the sum of artificials.
    let mut cost = vec![0.0; n + m + 1];
    let mut value = 0.0;
    for i in 0..m {
        let row = &data[i * width..(i + 1) * width];
        for j in 0..n {
            cost[j] -= row[j];
        }
        value -= row[width - 1];
    }
    let mut t = Tableau {
        rows: m,
        width,
        n,
        data,
        basis: (n..n + m).collect(),
        alive: vec![true; m],
        cost,
        value,
    };
    let mut pivots = 0;
    let status = t.run(n, opts, &mut pivots);
    let infeasibility = -t.value;
    let fail = |status, infeasibility, pivots| LpSolution {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        duals: vec![0.0; m],
        pivots,
        infeasibility,
    };
    if status == LpStatus::IterationLimit {
        return fail(status, infeasibility, pivots);
    }
    let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if infeasibility > opts.feasibility_tol * scale {
        return fail(LpStatus::Infeasible, infeasibility, pivots);
    }

    // Drive remaining artificials out of the basis; retire redundant rows.
    for i in 0..m {
        if t.basis[i] < n {
            continue;
        }
        let mut best = None;
        let mut best_mag = opts.optimality_tol.max(1e-11);
        for j in 0..n {
            let v = t.at(i, j).abs();
            if v > best_mag {
                best_mag = v;
                best = Some(j);
            }
        }
        match best {
            Some(j) => t.pivot(i, j),
            None => t.alive[i] = false,
        }
    }

    // Phase two.
    t.cost.iter_mut().for_each(|v| *v = 0.0);
    t.cost[..n].copy_from_slice(c);
    t.value = 0.0;
    for i in 0..m {
        if !t.alive[i] {
            continue;
        }
        let cb = if t.basis[i] < n { c[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            let row = &t.data[i * width..(i + 1) * width];
            for (x, &y) in t.cost.iter_mut().zip(row.iter()) {
                *x -= cb * y;
            }
            t.value -= cb * row[width - 1];
        }
    }
    for i in 0..m {
        if t.alive[i] {
            let bcol = t.basis[i];
            if bcol < n {
                t.cost[bcol] = 0.0;
            }
        }
    }
    let status = t.run(n, opts, &mut pivots);
    if status != LpStatus::Optimal {
        return fail(status, infeasibility, pivots);
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.alive[i] && t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    refine_basic_solution(a, b, &t, &mut x);
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();

    // y_i = -(reduced cost of artificial i) * sign_i.
    let duals = (0..m)
        .map(|i| {
            if t.alive[i] {
                -t.cost[n + i] * sign[i]
            } else {
                0.0
            }
        })
        .collect();

    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
        pivots,
        infeasibility,
    }
}

/// Re-solves `B x_B = b` on the live rows with an LU factorization.
fn refine_basic_solution(a: &DMatrix<f64>, b: &[f64], t: &Tableau, x: &mut [f64]) {
    let rows: Vec<usize> = (0..t.rows)
        .filter(|&i| t.alive[i] && t.basis[i] < t.n)
        .collect();
    if rows.len() != (0..t.rows).filter(|&i| t.alive[i]).count() || rows.is_empty() {
        return;
    }
    let k = rows.len();
    let live: Vec<usize> = (0..t.rows).filter(|&i| t.alive[i]).collect();
    let bmat = DMatrix::from_fn(k, k, |r, s| a[(live[r], t.basis[rows[s]])]);
    let rhs = DVector::from_fn(k, |r, _| b[live[r]]);
    if let Some(sol) = bmat.lu().solve(&rhs) {
        if sol.iter().all(|v| v.is_finite() && *v > -1e-7) {
            for (s, &i) in rows.iter().enumerate() {
                x[t.basis[i]] = sol[s].max(0.0);
            }
        }
    }
}

/// Phase-one feasibility test for `{x ≥ 0 : Ax = b}`.
pub fn is_feasible(a: &DMatrix<f64>, b: &[f64], opts: &SimplexOptions) -> bool {
    let c = vec![0.0; a.ncols()];
    solve(a, b, &c, opts).status == LpStatus::Optimal
}
