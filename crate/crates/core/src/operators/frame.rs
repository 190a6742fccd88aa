//! Undecimated Parseval filterbanks.
//!
//! A frame is specified by an orthogonal `W²×W²` matrix `U`. Each row,
//! reshaped to a `W×W` mask and scaled by `1/W`, is one analysis filter.
//! Orthonormal columns give `Σ_c m_c[q] m_c[q'] = δ_{qq'} / W²`, so with
//! circular boundaries synthesis undoes analysis exactly (`T Tᵀ = I`) and
//! `Tᵀ T` is the orthogonal projector onto the range of the analysis operator.

use crate::error::{Error, Result};
use crate::image::Image;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Orthogonality tolerance for accepting `U`.
pub const ORTHO_TOL: f64 = 1e-10;

/// `N_chan` channels of a common image shape, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStack {
    pub n_chan: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl ChannelStack {
    pub fn zeros(n_chan: usize, h: usize, w: usize) -> Self {
        Self {
            n_chan,
            h,
            w,
            data: vec![0.0; n_chan * h * w],
        }
    }

    pub fn from_vec(n_chan: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_chan * h * w {
            return Err(Error::dims(n_chan * h * w, data.len(), "channel stack"));
        }
        Ok(Self { n_chan, h, w, data })
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let p = self.plane();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let p = self.plane();
        &mut self.data[c * p..(c + 1) * p]
    }
}

/// Parseval filterbank built from an orthogonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TightFrame {
    side: usize,
    u: DMatrix<f64>,
    /// `masks[c][qi * W + qj]`, already scaled by `1/W`.
    masks: Vec<Vec<f64>>,
}

/// JSON description `{"W":…, "U":[row-major], "zero_mean": true}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    #[serde(rename = "W")]
    pub side: usize,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    #[serde(default = "default_true")]
    pub zero_mean: bool,
}

fn default_true() -> bool {
    true
}

fn ortho_defect(u: &DMatrix<f64>) -> f64 {
    let n = u.nrows();
    let g = u.transpose() * u;
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let t = if i == j { 1.0 } else { 0.0 };
            m = m.max((g[(i, j)] - t).abs());
        }
    }
    m
}

/// Largest singular value by power iteration on `MᵀM`.
fn sigma_max_estimate(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.01 * i as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..200 {
        let w = m.transpose() * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        v = w / nw;
        if (next - est).abs() <= 1e-14 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

/// Orthogonal polar factor of a square matrix by Björck iteration
/// `U ← (3/2)U − (1/2)U Uᵀ U`.
pub fn orthogonalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::invalid("orthogonalize needs a nonempty square matrix"));
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin < 1e-12 * smax {
        return Err(Error::Rank(format!(
            "matrix is numerically singular (σ_min/σ_max = {:e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    // Power iteration can undershoot slightly; Björck converges for σ < √3.
    let scale = sigma_max_estimate(m).max(smax * 0.5);
    let mut u = m / scale;
    for _ in 0..100 {
        if ortho_defect(&u) <= 1e-12 {
            break;
        }
        let utu = u.transpose() * &u;
        u = &u * 1.5 - (&u * utu) * 0.5;
    }
    Ok(u)
}

impl TightFrame {
    /// Builds the filterbank from an orthogonal `U` whose first row is
    /// constant, which makes channel 0 a moving average and every other
    /// channel zero-mean.
    pub fn from_orthogonal(u: DMatrix<f64>) -> Result<Self> {
        Self::build(u, true)
    }

    pub fn build(mut u: DMatrix<f64>, zero_mean: bool) -> Result<Self> {
        let n = u.nrows();
        if !u.is_square() || n == 0 {
            return Err(Error::invalid("frame matrix U must be square and nonempty"));
        }
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n {
            return Err(Error::invalid(format!(
                "frame matrix size {n} is not a perfect square W²"
            )));
        }
        let defect = ortho_defect(&u);
        if !(defect <= ORTHO_TOL) {
            return Err(Error::invalid(format!(
                "Parseval invariant violated: ‖UᵀU − I‖_max = {defect:e} > {ORTHO_TOL:e}"
            )));
        }
        if zero_mean {
            let first = u[(0, 0)];
            let constant = (0..n).all(|j| (u[(0, j)] - first).abs() <= 1e-10);
            if !constant || first == 0.0 {
                return Err(Error::invalid(
                    "zero-mean constraint violated: row 0 of U is not proportional to the all-ones vector",
                ));
            }
            if first < 0.0 {
                for j in 0..n {
                    u[(0, j)] = -u[(0, j)];
                }
            }
        }
        let inv = 1.0 / side as f64;
        let masks = (0..n)
            .map(|c| (0..n).map(|q| u[(c, q)] * inv).collect())
            .collect();
        Ok(Self { side, u, masks })
    }

    pub fn from_spec(spec: &FrameSpec) -> Result<Self> {
        let n = spec.side * spec.side;
        if spec.u.len() != n * n {
            return Err(Error::dims(n * n, spec.u.len(), "frame spec U"));
        }
        Self::build(DMatrix::from_row_slice(n, n, &spec.u), spec.zero_mean)
    }

    pub fn to_spec(&self) -> FrameSpec {
        let n = self.n_chan();
        FrameSpec {
            side: self.side,
            u: (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.u[(i, j)]).collect(),
            zero_mean: true,
        }
    }

    /// Single-channel identity frame (`W = 1`).
    pub fn identity() -> Self {
        Self::from_orthogonal(DMatrix::from_element(1, 1, 1.0)).expect("1x1 identity is orthogonal")
    }

    /// 2×2 Haar filterbank.
    pub fn haar2() -> Self {
        let u = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.5, 0.5, 0.5, //
                0.5, 0.5, -0.5, -0.5, //
                0.5, -0.5, 0.5, -0.5, //
                0.5, -0.5, -0.5, 0.5,
            ],
        );
        Self::from_orthogonal(u).expect("Haar matrix is orthogonal")
    }

    /// Separable 3×3 DCT-II filterbank, DC channel first, re-orthogonalized.
    pub fn dct3() -> Self {
        Self::dct(3).expect("DCT basis is orthogonal")
    }

    /// Separable `W×W` DCT-II filterbank with the DC channel first.
    pub fn dct(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("mask side must be positive"));
        }
        let c1 = |k: usize, n: usize| {
            let a = if k == 0 {
                (1.0 / side as f64).sqrt()
            } else {
                (2.0 / side as f64).sqrt()
            };
            a * (std::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / (2 * side) as f64).cos()
        };
        let n = side * side;
        let raw = DMatrix::from_fn(n, n, |row, col| {
            let (k1, k2) = (row / side, row % side);
            let (n1, n2) = (col / side, col % side);
            c1(k1, n1) * c1(k2, n2)
        });
        let mut u = orthogonalize(&raw)?;
        // Re-impose an exactly constant DC row (it is already orthogonal to
        // the rest up to round-off).
        let dc = 1.0 / side as f64;
        for j in 0..n {
            u[(0, j)] = dc;
        }
        Self::from_orthogonal(u)
    }

    /// Preset by name: `identity`, `haar2`, `dct3`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "identity" | "id" => Ok(Self::identity()),
            "haar2" => Ok(Self::haar2()),
            "dct3" => Ok(Self::dct3()),
            other => Err(Error::invalid(format!("unknown frame preset '{other}'"))),
        }
    }

    /// Mask side `W`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_chan(&self) -> usize {
        self.masks.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn mask(&self, c: usize) -> &[f64] {
        &self.masks[c]
    }

    /// `‖UᵀU − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        ortho_defect(&self.u)
    }

    /// Analysis `Tᵀ`: circular correlation of the image with every mask.
    pub fn analyze(&self, s: &Image) -> ChannelStack {
        let mut out = ChannelStack::zeros(self.n_chan(), s.h, s.w);
        self.analyze_into(&s.data, s.h, s.w, &mut out.data);
        out
    }

    /// Synthesis `T`: adjoint of [`analyze`](Self::analyze).
    pub fn synthesize(&self, z: &ChannelStack) -> Result<Image> {
        self.check_stack(z)?;
        let mut out = Image::zeros(z.h, z.w);
        self.synthesize_into(&z.data, z.h, z.w, &mut out.data);
        Ok(out)
    }

    /// `Tᵀ T`, the projector onto the range of the analysis operator.
    pub fn range_projection(&self, z: &ChannelStack) -> Result<ChannelStack> {
        let s = self.synthesize(z)?;
        Ok(self.analyze(&s))
    }

    fn check_stack(&self, z: &ChannelStack) -> Result<()> {
        if z.n_chan != self.n_chan() {
            return Err(Error::dims(self.n_chan(), z.n_chan, "frame channel count"));
        }
        if z.data.len() != z.n_chan * z.h * z.w {
            return Err(Error::dims(z.n_chan * z.h * z.w, z.data.len(), "channel stack data"));
        }
        Ok(())
    }

    pub(crate) fn analyze_into(&self, s: &[f64], h: usize, w: usize, out: &mut [f64]) {
        let side = self.side;
        let plane = h * w;
        for (c, mask) in self.masks.iter().enumerate() {
            let dst = &mut out[c * plane..(c + 1) * plane];
            dst.iter_mut().for_each(|v| *v = 0.0);
            for qi in 0..side {
                for qj in 0..side {
                    let m = mask[qi * side + qj];
                    if m == 0.0 {
                        continue;
                    }
                    for i in 0..h {
                        let si = (i + qi) % h;
                        let row = &s[si * w..(si + 1) * w];
                        let drow = &mut dst[i * w..(i + 1) * w];
                        let shift = qj % w;
                        // j + qj wraps once at most.
                        let (head, tail) = row.split_at(shift);
                        for (d, v) in drow.iter_mut().zip(tail.iter().chain(head.iter())) {
                            *d += m * v;
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn synthesize_into(&self, z: &[f64], h: usize, w: usize, out: &mut [f64]) {
        let side = self.side;
        let plane = h * w;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (c, mask) in self.masks.iter().enumerate() {
            let src = &z[c * plane..(c + 1) * plane];
            for qi in 0..side {
                for qj in 0..side {
                    let m = mask[qi * side + qj];
                    if m == 0.0 {
                        continue;
                    }
                    // out[p + q] += m · z[p]
                    for i in 0..h {
                        let oi = (i + qi) % h;
                        let srow = &src[i * w..(i + 1) * w];
                        let orow = &mut out[oi * w..(oi + 1) * w];
                        let shift = qj % w;
                        let (head, tail) = orow.split_at_mut(shift);
                        for (o, v) in tail.iter_mut().chain(head.iter_mut()).zip(srow) {
                            *o += m * v;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_image(rng: &mut SeededRng, h: usize, w: usize) -> Image {
        Image::new(h, w, rng.normal_vec(h * w)).unwrap()
    }

    fn l2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Direct evaluation of the correlation definition, used as an oracle.
    fn analyze_naive(f: &TightFrame, s: &Image) -> Vec<f64> {
        let w = f.side();
        let mut out = Vec::new();
        for c in 0..f.n_chan() {
            for i in 0..s.h {
                for j in 0..s.w {
                    let mut acc = 0.0;
                    for qi in 0..w {
                        for qj in 0..w {
                            acc += f.mask(c)[qi * w + qj] * s.at((i + qi) % s.h, (j + qj) % s.w);
                        }
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    #[test]
    fn analyze_matches_naive_correlation() {
        let mut rng = SeededRng::new(4);
        let s = random_image(&mut rng, 5, 7);
        for f in [TightFrame::haar2(), TightFrame::dct3()] {
            let a = f.analyze(&s);
            let b = analyze_naive(&f, &s);
            for (x, y) in a.data.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn parseval_identity_presets() {
        let mut rng = SeededRng::new(8);
        for f in [TightFrame::identity(), TightFrame::haar2(), TightFrame::dct3()] {
            let s = random_image(&mut rng, 16, 16);
            let back = f.synthesize(&f.analyze(&s)).unwrap();
            let err: Vec<f64> = back.data.iter().zip(&s.data).map(|(a, b)| a - b).collect();
            assert!(l2(&err) <= 1e-10 * l2(&s.data));
        }
    }

    #[test]
    fn identity_frame_analyze_is_identity() {
        let mut rng = SeededRng::new(1);
        let s = random_image(&mut rng, 4, 3);
        assert_eq!(TightFrame::identity().analyze(&s).data, s.data);
    }

    #[test]
    fn haar_constant_image() {
        let f = TightFrame::haar2();
        let z = f.analyze(&Image::filled(6, 6, 0.7));
        assert!(z.channel(0).iter().all(|v| (v - 0.7).abs() < 1e-15));
        for c in 1..4 {
            assert!(z.channel(c).iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = SeededRng::new(12);
        let f = TightFrame::dct3();
        let s = random_image(&mut rng, 8, 9);
        let z = ChannelStack::from_vec(9, 8, 9, rng.normal_vec(9 * 72)).unwrap();
        let lhs: f64 = f.analyze(&s).data.iter().zip(&z.data).map(|(a, b)| a * b).sum();
        let rhs: f64 = s.data.iter().zip(&f.synthesize(&z).unwrap().data).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn range_projection_idempotent() {
        let mut rng = SeededRng::new(13);
        let f = TightFrame::haar2();
        let z = ChannelStack::from_vec(4, 8, 8, rng.normal_vec(256)).unwrap();
        let p = f.range_projection(&z).unwrap();
        let pp = f.range_projection(&p).unwrap();
        for (a, b) in p.data.iter().zip(&pp.data) {
            assert!((a - b).abs() < 1e-10);
        }
        let w1 = TightFrame::identity();
        let z1 = ChannelStack::from_vec(1, 3, 3, rng.normal_vec(9)).unwrap();
        assert_eq!(w1.range_projection(&z1).unwrap(), z1);
    }

    #[test]
    fn orthogonalize_examples() {
        let q = TightFrame::haar2().matrix().clone();
        let u = orthogonalize(&q).unwrap();
        assert!((u - q).amax() < 1e-14);
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = orthogonalize(&d).unwrap();
        assert!((u - DMatrix::identity(2, 2)).amax() < 1e-12);
        let mut rng = SeededRng::new(99);
        let m = DMatrix::from_vec(9, 9, rng.normal_vec(81));
        let u = orthogonalize(&m).unwrap();
        assert!(ortho_defect(&u) <= 1e-10);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(orthogonalize(&s), Err(Error::Rank(_))));
    }

    #[test]
    fn non_orthogonal_rejected() {
        let mut u = TightFrame::haar2().matrix().clone();
        u[(1, 1)] += 0.1;
        let err = TightFrame::from_orthogonal(u).unwrap_err();
        assert!(err.to_string().contains("Parseval"));
    }

    #[test]
    fn non_constant_first_row_rejected() {
        let u = DMatrix::from_row_slice(4, 4, &[
            0.5, 0.5, -0.5, -0.5, //
            0.5, 0.5, 0.5, 0.5, //
            0.5, -0.5, 0.5, -0.5, //
            0.5, -0.5, -0.5, 0.5,
        ]);
        assert!(TightFrame::from_orthogonal(u.clone()).is_err());
        assert!(TightFrame::build(u, false).is_ok());
    }

    #[test]
    fn spec_round_trip() {
        let f = TightFrame::dct3();
        let g = TightFrame::from_spec(&f.to_spec()).unwrap();
        assert_eq!(f, g);
    }
}
