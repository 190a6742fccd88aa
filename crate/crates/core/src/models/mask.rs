//! Fourier sampling masks on a centered frequency grid.
//!
//! Row `i` of the grid holds vertical frequency `i − h/2`, column `j` the
//! horizontal frequency `j − w/2`, so DC sits at `(h/2, w/2)`. Generated masks
//! are conjugate-symmetric (`k` kept iff `−k` kept), which keeps `HᵀH` an
//! orthogonal projector for real images.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Random,
    Radial,
    Cartesian,
    Custom,
}

/// Generator parameters, e.g. `{"kind":"radial","n_lines":30}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MaskSpec {
    Random {
        density: f64,
    },
    Radial {
        n_lines: usize,
    },
    Cartesian {
        density: f64,
        /// Profile width `σ_c` in frequency samples; defaults to `w/10`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingMask {
    pub h: usize,
    pub w: usize,
    pub kind: MaskKind,
    pub seed: u64,
    /// Centered grid, row-major.
    pub kept: Vec<bool>,
}

fn centered_to_dft(i: usize, n: usize) -> usize {
    (i + n - n / 2) % n
}

fn freq_to_centered(a: isize, n: usize) -> usize {
    let k = a.rem_euclid(n as isize) as usize;
    (k + n / 2) % n
}

impl SamplingMask {
    /// Wraps an explicit centered grid; DC must be kept.
    pub fn from_kept(h: usize, w: usize, kept: Vec<bool>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::invalid("mask dimensions must be positive"));
        }
        if kept.len() != h * w {
            return Err(Error::dims(h * w, kept.len(), "mask grid"));
        }
        let m = Self {
            h,
            w,
            kind: MaskKind::Custom,
            seed: 0,
            kept,
        };
        if !m.kept[m.dc_index()] {
            return Err(Error::invalid("mask must keep the DC frequency"));
        }
        Ok(m)
    }

    pub fn full(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            kind: MaskKind::Custom,
            seed: 0,
            kept: vec![true; h * w],
        }
    }

    fn dc_index(&self) -> usize {
        (self.h / 2) * self.w + self.w / 2
    }

    pub fn count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn kept_fraction(&self) -> f64 {
        self.count() as f64 / self.kept.len() as f64
    }

    /// Whether the DFT-ordered frequency `(ku, kv)` is kept.
    pub fn kept_dft(&self, ku: usize, kv: usize) -> bool {
        let i = (ku + self.h / 2) % self.h;
        let j = (kv + self.w / 2) % self.w;
        self.kept[i * self.w + j]
    }

    /// Flat DFT indices of the kept samples, in centered row-major order.
    pub fn kept_dft_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count());
        for i in 0..self.h {
            for j in 0..self.w {
                if self.kept[i * self.w + j] {
                    out.push(centered_to_dft(i, self.h) * self.w + centered_to_dft(j, self.w));
                }
            }
        }
        out
    }

    /// `(M(k) + M(−k)) / 2` per DFT index: the Fourier multiplier of `HᵀH`.
    pub fn symmetric_weights(&self) -> Vec<f64> {
        let (h, w) = (self.h, self.w);
        let mut out = vec![0.0; h * w];
        for ku in 0..h {
            for kv in 0..w {
                let a = self.kept_dft(ku, kv) as u8 as f64;
                let b = self.kept_dft((h - ku) % h, (w - kv) % w) as u8 as f64;
                out[ku * w + kv] = 0.5 * (a + b);
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric_weights().iter().all(|&m| m == 0.0 || m == 1.0)
    }

    fn set_freq(&mut self, a: isize, b: isize) {
        let i = freq_to_centered(a, self.h);
        let j = freq_to_centered(b, self.w);
        self.kept[i * self.w + j] = true;
        let i = freq_to_centered(-a, self.h);
        let j = freq_to_centered(-b, self.w);
        self.kept[i * self.w + j] = true;
    }
}

/// Builds a conjugate-symmetric mask with DC on.
pub fn make_mask(spec: &MaskSpec, h: usize, w: usize, seed: u64) -> Result<SamplingMask> {
    if h == 0 || w == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    let kind = match spec {
        MaskSpec::Random { .. } => MaskKind::Random,
        MaskSpec::Radial { .. } => MaskKind::Radial,
        MaskSpec::Cartesian { .. } => MaskKind::Cartesian,
    };
    let mut m = SamplingMask {
        h,
        w,
        kind,
        seed,
        kept: vec![false; h * w],
    };
    let mut rng = SeededRng::new(seed);
    match *spec {
        MaskSpec::Random { density } => {
            check_density(density)?;
            for ku in 0..h {
                for kv in 0..w {
                    let k = ku * w + kv;
                    let partner = ((h - ku) % h) * w + (w - kv) % w;
                    if partner < k {
                        continue;
                    }
                    if rng.bernoulli(density) {
                        m.set_freq(ku as isize, kv as isize);
                    }
                }
            }
        }
        MaskSpec::Radial { n_lines } => {
            if n_lines == 0 {
                return Err(Error::invalid("radial mask needs n_lines ≥ 1"));
            }
            let r = h.max(w) as f64;
            let (ha, wa) = ((h / 2) as isize, (w / 2) as isize);
            for l in 0..n_lines {
                let theta = l as f64 * std::f64::consts::PI / n_lines as f64;
                let end_b = (r * theta.cos()).round() as isize;
                let end_a = (r * theta.sin()).round() as isize;
                for (a, b) in bresenham(0, 0, end_a, end_b) {
                    if a.abs() > ha || b.abs() > wa {
                        break;
                    }
                    m.set_freq(a, b);
                }
            }
        }
        MaskSpec::Cartesian { density, sigma } => {
            check_density(density)?;
            let sigma = sigma.unwrap_or(w as f64 / 10.0);
            if !(sigma > 0.0) {
                return Err(Error::invalid("cartesian profile width must be positive"));
            }
            let freqs: Vec<isize> = (0..w).map(|j| j as isize - (w / 2) as isize).collect();
            let profile: Vec<f64> = freqs
                .iter()
                .map(|&b| (1.0 + b.unsigned_abs() as f64 / sigma).powi(-2))
                .collect();
            let target = density * w as f64;
            let expected = |c: f64| profile.iter().map(|p| (c * p).min(1.0)).sum::<f64>();
            let (mut lo, mut hi) = (0.0, 1.0);
            while expected(hi) < target && hi < 1e12 {
                hi *= 2.0;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if expected(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let c = hi;
            let mut col_kept = vec![false; w];
            for (j, &b) in freqs.iter().enumerate() {
                let partner = freq_to_centered(-b, w);
                if partner < j {
                    col_kept[j] = col_kept[partner];
                    continue;
                }
                let keep = b == 0 || rng.bernoulli((c * profile[j]).min(1.0));
                col_kept[j] = keep;
                col_kept[partner] = keep;
            }
            for row in m.kept.chunks_mut(w) {
                row.copy_from_slice(&col_kept);
            }
        }
    }
    let dc = m.dc_index();
    m.kept[dc] = true;
    Ok(m)
}

fn check_density(d: f64) -> Result<()> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::invalid(format!("density must lie in (0, 1], got {d}")));
    }
    Ok(())
}

/// Integer points of the segment from `(a0, b0)` to `(a1, b1)`.
fn bresenham(a0: isize, b0: isize, a1: isize, b1: isize) -> Vec<(isize, isize)> {
    let da = (a1 - a0).abs();
    let db = -(b1 - b0).abs();
    let sa = if a0 < a1 { 1 } else { -1 };
    let sb = if b0 < b1 { 1 } else { -1 };
    let (mut a, mut b) = (a0, b0);
    let mut err = da + db;
    let mut out = Vec::new();
    loop {
        out.push((a, b));
        if a == a1 && b == b1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= db {
            err += db;
            a += sa;
        }
        if e2 <= da {
            err += da;
            b += sb;
        }
    }
    out
}
