//! Fixtures shared by the benchmarks.

use polyreg_core::models::{make_mask, make_phantom, MaskSpec, PhantomKind};
use polyreg_core::{ForwardModel, Image, Problem, Result, SeparablePotential, TightFrame};

/// Noisy piecewise-constant phantom of side `n` with Haar weighted ℓ1.
pub fn denoising_problem(n: usize, lambda: f64) -> Result<Problem> {
    let truth = make_phantom(PhantomKind::PiecewiseConstant, n, n, 1)?;
    let noisy = polyreg_core::models::add_noise(&truth, 0.1, 1)?;
    Problem::denoising(&noisy, TightFrame::haar2(), SeparablePotential::detail_l1(4, 1.0)?, lambda)
}

/// Radial-mask Fourier problem on the Shepp-like phantom of side `n`.
pub fn mri_problem(n: usize, lines: usize, lambda: f64) -> Result<(Problem, Image)> {
    let truth = make_phantom(PhantomKind::SheppLike, n, n, 1)?;
    let model = ForwardModel::masked_dft(make_mask(&MaskSpec::Radial { n_lines: lines }, n, n, 1)?);
    let y = model.apply_image(&truth)?;
    let p = Problem::new(model, y, TightFrame::haar2(), SeparablePotential::detail_l1(4, 1.0)?, lambda)?;
    Ok((p, truth))
}
