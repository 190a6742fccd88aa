//! Polyhedral norms on `R^d`.
//!
//! A polyhedral norm can be described by the vertices of its unit ball
//! (synthesis form, `min ‖z‖₁ s.t. Vz = x`) or by its facets (analysis form,
//! `‖Fᵀx‖_∞`). The weighted-ℓ1 family `‖Lx‖₁` and its dual zonotope gauge
//! form a second dual pair. This module evaluates all four, converts
//! between vertex and facet descriptions for `d ≤ 3`, reduces dictionaries
//! to their extreme points, and measures how well a polytope approximates a
//! smooth ball.

mod equivalence;
mod extreme;
mod facets;
mod norms;
mod witness;

pub use equivalence::{
    approximate_ball, measure_equivalence, polygon_epsilon, BallTarget, NormEquivalenceReport,
};
pub use extreme::{canonicalize_columns, extreme_points};
pub use facets::facets_from_vertices;
pub use norms::{
    analysis_norm, synthesis_norm, weighted_l1_norm, zonotope_gauge, AnalysisNorm, LpNorm, Norm,
    SynthesisNorm, WeightedL1Norm, ZonotopeGauge,
};
pub use witness::{fit_l1_to_linf, l1_linf_witness, LinfFit, MAX_WITNESS_DIM};

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Relative singular-value cutoff used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Numerical rank of a matrix.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

/// Dictionary of atoms (columns) in `R^d`; the unit ball is `Conv{±v_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexDictionary {
    cols: DMatrix<f64>,
}

impl VertexDictionary {
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        check_finite(&cols, "vertex dictionary")?;
        Ok(Self { cols })
    }

    /// Builds a dictionary from a list of column vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let first = columns.first().ok_or(Error::EmptyInput("dictionary"))?;
        let d = first.len();
        for c in columns {
            if c.len() != d {
                return Err(Error::dims(d, c.len(), "dictionary column"));
            }
        }
        Self::new(DMatrix::from_fn(d, columns.len(), |i, j| columns[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.cols.nrows()
    }

    pub fn len(&self) -> usize {
        self.cols.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cols.column(j).iter().cloned().collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.column(j)).collect()
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.cols)
    }

    pub fn require_full_rank(&self) -> Result<()> {
        let r = self.rank();
        if r == self.dim() {
            Ok(())
        } else {
            Err(Error::Rank(format!(
                "dictionary has rank {r} < d = {}",
                self.dim()
            )))
        }
    }
}

/// Facet vectors `f_m` in `R^d`; the unit ball is `{x : |⟨f_m, x⟩| ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetMatrix {
    cols: DMatrix<f64>,
}

impl FacetMatrix {
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        check_finite(&cols, "facet matrix")?;
        Ok(Self { cols })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        Ok(Self {
            cols: VertexDictionary::from_columns(columns)?.cols,
        })
    }

    pub fn dim(&self) -> usize {
        self.cols.nrows()
    }

    pub fn len(&self) -> usize {
        self.cols.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cols.column(j).iter().cloned().collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.column(j)).collect()
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.cols)
    }
}

/// Regularization operator `L` with rows `u_nᵀ` (an `N×d` matrix).
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationOperator {
    rows: DMatrix<f64>,
}

impl RegularizationOperator {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        check_finite(&rows, "regularization operator")?;
        Ok(Self { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput("operator rows"))?;
        let d = first.len();
        for r in rows {
            if r.len() != d {
                return Err(Error::dims(d, r.len(), "operator row"));
            }
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    /// Number of rows `N`.
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        self.rows.row(n).iter().cloned().collect()
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.rows)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
