use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

pub const MIN_PHANTOM_SIDE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    PiecewiseConstant,
    SheppLike,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise_constant" => Ok(Self::PiecewiseConstant),
            "shepp_like" | "shepp" => Ok(Self::SheppLike),
            other => Err(Error::invalid(format!("unknown phantom '{other}'"))),
        }
    }
}

pub fn make_phantom(kind: PhantomKind, h: usize, w: usize, seed: u64) -> Result<Image> {
    if h < MIN_PHANTOM_SIDE || w < MIN_PHANTOM_SIDE {
        return Err(Error::invalid(format!(
            "phantom must be at least {MIN_PHANTOM_SIDE}x{MIN_PHANTOM_SIDE}, got {h}x{w}"
        )));
    }
    Ok(match kind {
        PhantomKind::PiecewiseConstant => piecewise_constant(h, w, seed),
        PhantomKind::SheppLike => shepp_like(h, w),
    })
}

/// Random axis-aligned rectangles painted over a constant background.
fn piecewise_constant(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = SeededRng::new(seed);
    let mut img = Image::filled(h, w, 0.1 + 0.3 * rng.uniform());
    let n_rect = 5 + rng.below(6);
    for _ in 0..n_rect {
        let rh = h / 8 + rng.below(h / 2);
        let rw = w / 8 + rng.below(w / 2);
        let top = rng.below(h - rh + 1);
        let left = rng.below(w - rw + 1);
        let v = rng.uniform();
        for i in top..top + rh {
            img.data[i * w + left..i * w + left + rw].fill(v);
        }
    }
    img
}

/// Modified Shepp-Logan head: (intensity, semi-axes, center, rotation).
const SHEPP: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

fn shepp_like(h: usize, w: usize) -> Image {
    let mut img = Image::zeros(h, w);
    for i in 0..h {
        let y = 1.0 - (2 * i + 1) as f64 / h as f64;
        for j in 0..w {
            let x = (2 * j + 1) as f64 / w as f64 - 1.0;
            let mut v = 0.0;
            for &(a, ax, ay, cx, cy, deg) in &SHEPP {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = (c * dx + s * dy) / ax;
                let t = (-s * dx + c * dy) / ay;
                if u * u + t * t <= 1.0 {
                    v += a;
                }
            }
            img.data[i * w + j] = v.clamp(0.0, 1.0);
        }
    }
    img
}
