//! Polyhedral norms, proximal operators, Parseval filterbanks and convex
//! solvers for image reconstruction.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod image;
pub mod io;
pub mod lp;
pub mod models;
pub mod operators;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use image::Image;
pub use models::{ForwardModel, SamplingMask};
pub use operators::{SeparablePotential, TightFrame};
pub use solvers::{solve, Algorithm, Problem, SolveReport, SolverConfig};
