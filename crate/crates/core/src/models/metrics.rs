use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::SeededRng;

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a.is_empty() {
        return Err(Error::EmptyInput("image"));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

/// `10·log10(peak² / MSE)`; identical images give `+∞`.
pub fn psnr(reference: &Image, x: &Image, peak: f64) -> Result<f64> {
    let m = mse(reference, x)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// `s + σ·N(0, 1)` per pixel, no clipping.
pub fn add_noise(s: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and ≥ 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(s.clone());
    }
    let mut rng = SeededRng::new(seed);
    let data = s.data.iter().map(|v| v + sigma * rng.normal()).collect();
    Ok(Image { h: s.h, w: s.w, data })
}

/// `n` points from `10^a` to `10^b`, log-spaced.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![10f64.powf(a)],
        _ => (0..n)
            .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// The λ grid used for tuning: `logspace(−3, 0, 20)`.
pub fn default_lambda_grid() -> Vec<f64> {
    logspace(-3.0, 0.0, 20)
}

/// Outcome of a λ grid search.
#[derive(Clone, Debug)]
pub struct TuneResult<T> {
    pub lambda: f64,
    pub psnr: f64,
    pub output: T,
    /// `(λ, PSNR)` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Runs `solve` for each λ and keeps the reconstruction with the best PSNR
/// against `reference`. Ties keep the smaller λ.
pub fn tune_lambda<T>(
    grid: &[f64],
    reference: &Image,
    mut solve: impl FnMut(f64) -> Result<(Image, T)>,
) -> Result<TuneResult<(Image, T)>> {
    let mut best: Option<TuneResult<(Image, T)>> = None;
    let mut curve = Vec::with_capacity(grid.len());
    for &lam in grid {
        let (img, extra) = solve(lam)?;
        let p = psnr(reference, &img, 1.0)?;
        curve.push((lam, p));
        if best.as_ref().is_none_or(|b| p > b.psnr) {
            best = Some(TuneResult {
                lambda: lam,
                psnr: p,
                output: (img, extra),
                curve: Vec::new(),
            });
        }
    }
    let mut best = best.ok_or(Error::EmptyInput("lambda grid"))?;
    best.curve = curve;
    Ok(best)
}
