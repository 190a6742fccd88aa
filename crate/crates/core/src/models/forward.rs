use super::fourier::Fft2;
use super::mask::SamplingMask;
use crate::error::{Error, Result};
use crate::image::Image;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum ForwardKind {
    Identity,
    /// `H = g·I`.
    ScaledIdentity(f64),
    /// `H = M·DFT2/√(hw)` with measurements stored as `(re, im)` pairs.
    MaskedDft {
        mask: SamplingMask,
        fft: Fft2,
        kept: Vec<usize>,
        weights: Vec<f64>,
    },
}

/// Linear measurement operator on `h×w` real images.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardModel {
    h: usize,
    w: usize,
    kind: ForwardKind,
}

impl ForwardModel {
    pub fn identity(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            kind: ForwardKind::Identity,
        }
    }

    pub fn scaled_identity(h: usize, w: usize, gain: f64) -> Result<Self> {
        if !gain.is_finite() || gain == 0.0 {
            return Err(Error::invalid(format!("gain must be finite and nonzero, got {gain}")));
        }
        Ok(Self {
            h,
            w,
            kind: ForwardKind::ScaledIdentity(gain),
        })
    }

    pub fn masked_dft(mask: SamplingMask) -> Self {
        let (h, w) = (mask.h, mask.w);
        let kept = mask.kept_dft_indices();
        let weights = mask.symmetric_weights();
        Self {
            h,
            w,
            kind: ForwardKind::MaskedDft {
                fft: Fft2::new(h, w),
                kept,
                weights,
                mask,
            },
        }
    }

    pub fn kind(&self) -> &ForwardKind {
        &self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn image_len(&self) -> usize {
        self.h * self.w
    }

    pub fn meas_len(&self) -> usize {
        match &self.kind {
            ForwardKind::MaskedDft { kept, .. } => 2 * kept.len(),
            _ => self.h * self.w,
        }
    }

    pub fn mask(&self) -> Option<&SamplingMask> {
        match &self.kind {
            ForwardKind::MaskedDft { mask, .. } => Some(mask),
            _ => None,
        }
    }

    /// Upper bound on `‖H‖²`.
    pub fn norm_bound(&self) -> f64 {
        match self.kind {
            ForwardKind::ScaledIdentity(g) => g * g,
            _ => 1.0,
        }
    }

    /// Smallest eigenvalue of `HᵀH`.
    pub fn strong_convexity(&self) -> f64 {
        match &self.kind {
            ForwardKind::Identity => 1.0,
            ForwardKind::ScaledIdentity(g) => g * g,
            ForwardKind::MaskedDft { weights, .. } => weights.iter().cloned().fold(1.0, f64::min),
        }
    }

    fn check(&self, len: usize, expected: usize, ctx: &'static str) -> Result<()> {
        if len != expected {
            return Err(Error::dims(expected, len, ctx));
        }
        Ok(())
    }

    /// `H s`.
    pub fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.check(s.len(), self.image_len(), "forward model input")?;
        Ok(match &self.kind {
            ForwardKind::Identity => s.to_vec(),
            ForwardKind::ScaledIdentity(g) => s.iter().map(|v| g * v).collect(),
            ForwardKind::MaskedDft { fft, kept, .. } => {
                let spec = fft.forward_real(s);
                kept.iter().flat_map(|&k| [spec[k].re, spec[k].im]).collect()
            }
        })
    }

    /// `Hᵀ u`; for Fourier sampling, the real part of the unitary inverse
    /// DFT of the zero-filled spectrum.
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u.len(), self.meas_len(), "measurement vector")?;
        Ok(match &self.kind {
            ForwardKind::Identity => u.to_vec(),
            ForwardKind::ScaledIdentity(g) => u.iter().map(|v| g * v).collect(),
            ForwardKind::MaskedDft { fft, kept, .. } => {
                let mut spec = vec![Complex64::new(0.0, 0.0); self.image_len()];
                for (n, &k) in kept.iter().enumerate() {
                    spec[k] += Complex64::new(u[2 * n], u[2 * n + 1]);
                }
                fft.inverse(&mut spec);
                spec.into_iter().map(|c| c.re).collect()
            }
        })
    }

    /// `HᵀH s`.
    pub fn normal(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.check(s.len(), self.image_len(), "forward model input")?;
        Ok(match &self.kind {
            ForwardKind::Identity => s.to_vec(),
            ForwardKind::ScaledIdentity(g) => s.iter().map(|v| g * g * v).collect(),
            ForwardKind::MaskedDft { .. } => self.fourier_multiply(s, |m| m),
        })
    }

    /// `(I + t HᵀH)⁻¹ v`, the resolvent used by primal-dual data steps.
    pub fn normal_solve(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len(), self.image_len(), "forward model input")?;
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("resolvent step must be ≥ 0, got {t}")));
        }
        Ok(match &self.kind {
            ForwardKind::Identity => v.iter().map(|x| x / (1.0 + t)).collect(),
            ForwardKind::ScaledIdentity(g) => v.iter().map(|x| x / (1.0 + t * g * g)).collect(),
            ForwardKind::MaskedDft { .. } => self.fourier_multiply(v, |m| 1.0 / (1.0 + t * m)),
        })
    }

    fn fourier_multiply(&self, s: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let ForwardKind::MaskedDft { fft, weights, .. } = &self.kind else {
            unreachable!()
        };
        let mut spec = fft.forward_real(s);
        for (c, &m) in spec.iter_mut().zip(weights) {
            *c *= f(m);
        }
        fft.inverse(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }

    pub fn apply_image(&self, s: &Image) -> Result<Vec<f64>> {
        if (s.h, s.w) != (self.h, self.w) {
            return Err(Error::invalid(format!(
                "image is {}x{}, model expects {}x{}",
                s.h, s.w, self.h, self.w
            )));
        }
        self.apply(&s.data)
    }

    /// Backprojection `Hᵀ y` as an image (zero-fill for Fourier sampling).
    pub fn backproject(&self, y: &[f64]) -> Result<Image> {
        Image::new(self.h, self.w, self.adjoint(y)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::mask::{make_mask, MaskSpec};
    use crate::rng::SeededRng;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn models() -> Vec<ForwardModel> {
        let (h, w) = (12, 16);
        vec![
            ForwardModel::identity(h, w),
            ForwardModel::scaled_identity(h, w, 2.0).unwrap(),
            ForwardModel::masked_dft(make_mask(&MaskSpec::Random { density: 0.4 }, h, w, 3).unwrap()),
            ForwardModel::masked_dft(make_mask(&MaskSpec::Radial { n_lines: 5 }, h, w, 0).unwrap()),
            ForwardModel::masked_dft(
                SamplingMask::from_kept(3, 3, vec![false, true, false, false, true, true, false, false, false])
                    .unwrap(),
            ),
        ]
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = SeededRng::new(21);
        for m in models() {
            for _ in 0..20 {
                let s = rng.normal_vec(m.image_len());
                let u = rng.normal_vec(m.meas_len());
                let lhs = dot(&m.apply(&s).unwrap(), &u);
                let rhs = dot(&s, &m.adjoint(&u).unwrap());
                assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn normal_and_resolvent_agree_with_definitions() {
        let mut rng = SeededRng::new(5);
        for m in models() {
            let s = rng.normal_vec(m.image_len());
            let direct = m.adjoint(&m.apply(&s).unwrap()).unwrap();
            let fast = m.normal(&s).unwrap();
            for (a, b) in direct.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-12);
            }
            let t = 0.7;
            let x = m.normal_solve(t, &s).unwrap();
            let back: Vec<f64> =
                x.iter().zip(m.normal(&x).unwrap()).map(|(a, b)| a + t * b).collect();
            for (a, b) in back.iter().zip(&s) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_mask_round_trip() {
        let mut rng = SeededRng::new(2);
        let m = ForwardModel::masked_dft(SamplingMask::full(8, 10));
        let s = rng.normal_vec(80);
        let back = m.adjoint(&m.apply(&s).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_fill_consistency_on_range() {
        let mut rng = SeededRng::new(8);
        let m = ForwardModel::masked_dft(make_mask(&MaskSpec::Radial { n_lines: 7 }, 16, 16, 0).unwrap());
        let y = m.apply(&rng.normal_vec(256)).unwrap();
        let again = m.apply(&m.adjoint(&y).unwrap()).unwrap();
        for (a, b) in again.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_errors() {
        let m = ForwardModel::identity(2, 2);
        assert!(m.apply(&[1.0]).is_err());
        assert!(m.adjoint(&[1.0; 5]).is_err());
        assert!(ForwardModel::scaled_identity(2, 2, 0.0).is_err());
    }
}
