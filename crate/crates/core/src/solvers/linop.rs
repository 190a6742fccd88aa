//! Matrix-free linear operators used by the generic solvers.

use crate::operators::TightFrame;
use crate::rng::SeededRng;
use nalgebra::{DMatrix, DVector};

pub trait LinearOperator {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn adjoint(&self, y: &[f64]) -> Vec<f64>;
}

/// Dense matrix `A` acting as `x ↦ A x`.
#[derive(Clone, Debug)]
pub struct DenseOp(pub DMatrix<f64>);

impl LinearOperator for DenseOp {
    fn input_len(&self) -> usize {
        self.0.ncols()
    }

    fn output_len(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.0 * DVector::from_column_slice(x)).data.into()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (self.0.transpose() * DVector::from_column_slice(y)).data.into()
    }
}

/// Frame analysis `Tᵀ` on `h×w` images.
#[derive(Clone, Debug)]
pub struct FrameAnalysisOp<'a> {
    pub frame: &'a TightFrame,
    pub h: usize,
    pub w: usize,
}

impl LinearOperator for FrameAnalysisOp<'_> {
    fn input_len(&self) -> usize {
        self.h * self.w
    }

    fn output_len(&self) -> usize {
        self.frame.n_chan() * self.h * self.w
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_len()];
        self.frame.analyze_into(x, self.h, self.w, &mut out);
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.input_len()];
        self.frame.synthesize_into(y, self.h, self.w, &mut out);
        out
    }
}

/// Circular forward differences: horizontal block, then vertical block.
#[derive(Clone, Copy, Debug)]
pub struct GradientOp {
    pub h: usize,
    pub w: usize,
}

impl LinearOperator for GradientOp {
    fn input_len(&self) -> usize {
        self.h * self.w
    }

    fn output_len(&self) -> usize {
        2 * self.h * self.w
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (h, w) = (self.h, self.w);
        let n = h * w;
        let mut out = vec![0.0; 2 * n];
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                out[p] = x[i * w + (j + 1) % w] - x[p];
                out[n + p] = x[((i + 1) % h) * w + j] - x[p];
            }
        }
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let (h, w) = (self.h, self.w);
        let n = h * w;
        let mut out = vec![0.0; n];
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                let left = i * w + (j + w - 1) % w;
                let up = ((i + h - 1) % h) * w + j;
                out[p] = y[left] - y[p] + y[n + up] - y[n + p];
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a PSD map by power iteration from a seeded start,
/// stopping at relative change `tol` or `max_iter` steps.
pub fn power_iteration(
    len: usize,
    map: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let mut x = SeededRng::new(0x5eed).normal_vec(len);
    let n0 = norm(&x);
    x.iter_mut().for_each(|v| *v /= n0);
    let mut est = 0.0;
    for _ in 0..max_iter {
        let y = map(&x);
        let ny = norm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return ny;
        }
        let next = dot(&x, &y);
        x = y.into_iter().map(|v| v / ny).collect();
        let done = (next - est).abs() <= tol * next.abs();
        est = next;
        if done {
            break;
        }
    }
    est
}

/// `‖A‖²` by power iteration on `AᵀA`.
pub fn squared_norm(op: &dyn LinearOperator, tol: f64, max_iter: usize) -> f64 {
    power_iteration(op.input_len(), |x| op.adjoint(&op.apply(x)), tol, max_iter)
}
