//! Channel-wise separable potentials `Φ(z) = Σ_n λ_n Σ_pixels φ_n(z)`.

use super::frame::ChannelStack;
use super::prox::shrink;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default Huber smoothing width for signals in `[0, 1]`.
pub const DEFAULT_HUBER_MU: f64 = 1e-2;

/// Monotone piecewise-linear map given by its knots, used as a learned prox.
///
/// Slopes must lie in `[0, 1]` and the map must fix the origin. Beyond the
/// outer knots the end slopes are continued.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxTable {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ProxTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::dims(x.len(), y.len(), "prox table outputs"));
        }
        if x.len() < 2 {
            return Err(Error::invalid("prox table needs at least two knots"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("prox table contains non-finite knots"));
        }
        for k in 1..x.len() {
            let dx = x[k] - x[k - 1];
            if !(dx > 0.0) {
                return Err(Error::invalid("prox table inputs must be strictly increasing"));
            }
            let s = (y[k] - y[k - 1]) / dx;
            if !(-1e-12..=1.0 + 1e-12).contains(&s) {
                return Err(Error::invalid(format!(
                    "prox table slope {s} on [{}, {}] is outside [0, 1] (not monotone or not 1-Lipschitz)",
                    x[k - 1],
                    x[k]
                )));
            }
        }
        let t = Self { x, y };
        let p0 = t.eval(0.0);
        if p0.abs() > 1e-12 {
            return Err(Error::invalid(format!("prox table maps 0 to {p0}, expected 0")));
        }
        Ok(t)
    }

    /// The identity map on `[-1, 1]`, extended linearly.
    pub fn identity() -> Self {
        Self {
            x: vec![-1.0, 1.0],
            y: vec![-1.0, 1.0],
        }
    }

    /// Soft-threshold at `t` written as a table.
    pub fn soft_threshold(t: f64) -> Result<Self> {
        Self::new(vec![-t - 1.0, -t, t, t + 1.0], vec![-1.0, 0.0, 0.0, 1.0])
    }

    pub fn inputs(&self) -> &[f64] {
        &self.x
    }

    pub fn outputs(&self) -> &[f64] {
        &self.y
    }

    fn slope(&self, k: usize) -> f64 {
        ((self.y[k + 1] - self.y[k]) / (self.x[k + 1] - self.x[k])).clamp(0.0, 1.0)
    }

    pub fn eval(&self, v: f64) -> f64 {
        interp(&self.x, &self.y, v, self.slope(0), self.slope(self.x.len() - 2))
    }

    /// Table of `prox_{tφ}` where `φ` is the potential whose prox is `self`.
    ///
    /// From `x = z + t φ'(z)` and `φ' = p⁻¹ − id`, the input knots move to
    /// `(1 − t) y_k + t x_k` while the outputs stay at `y_k`.
    pub fn rescaled(&self, t: f64) -> ProxTable {
        if t == 1.0 {
            return self.clone();
        }
        let x = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(xi, yi)| (1.0 - t) * yi + t * xi)
            .collect();
        ProxTable { x, y: self.y.clone() }
    }

    fn all_slopes_positive(&self) -> bool {
        (0..self.x.len() - 1).all(|k| self.slope(k) > 0.0)
    }

    /// `φ'(z) = p⁻¹(z) − z`, defined when every slope is positive.
    fn derivative(&self, z: f64) -> f64 {
        let n = self.x.len();
        let inv = interp(&self.y, &self.x, z, 1.0 / self.slope(0), 1.0 / self.slope(n - 2));
        inv - z
    }

    /// `φ(u) = ∫₀ᵘ (p⁻¹(v) − v) dv`, infinite outside the range of `p`.
    fn value(&self, u: f64) -> f64 {
        let n = self.x.len();
        let (s0, s1) = (self.slope(0), self.slope(n - 2));
        if (u > self.y[n - 1] && s1 == 0.0) || (u < self.y[0] && s0 == 0.0) {
            return f64::INFINITY;
        }
        // p⁻¹ is piecewise linear in v with breakpoints y_k; integrate the
        // pieces between 0 and u exactly by the midpoint rule.
        let (lo, hi, sign) = if u >= 0.0 { (0.0, u, 1.0) } else { (u, 0.0, -1.0) };
        let mut cuts = vec![lo, hi];
        cuts.extend(self.y.iter().copied().filter(|&v| v > lo && v < hi));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let inv = |v: f64| -> f64 {
            let a = if s0 > 0.0 { 1.0 / s0 } else { f64::INFINITY };
            let b = if s1 > 0.0 { 1.0 / s1 } else { f64::INFINITY };
            interp_inverse(&self.x, &self.y, v, a, b)
        };
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            acc += (inv(m) - m) * (w[1] - w[0]);
        }
        sign * acc
    }
}

/// Linear interpolation with given end slopes beyond the outer knots.
fn interp(xs: &[f64], ys: &[f64], v: f64, s_lo: f64, s_hi: f64) -> f64 {
    let n = xs.len();
    if v <= xs[0] {
        return ys[0] + s_lo * (v - xs[0]);
    }
    if v >= xs[n - 1] {
        return ys[n - 1] + s_hi * (v - xs[n - 1]);
    }
    let k = xs.partition_point(|&a| a <= v) - 1;
    let t = (v - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// Inverse of the table at `v` (strictly inside a non-flat piece).
fn interp_inverse(xs: &[f64], ys: &[f64], v: f64, s_lo: f64, s_hi: f64) -> f64 {
    let n = xs.len();
    if v <= ys[0] {
        return xs[0] + s_lo * (v - ys[0]);
    }
    if v >= ys[n - 1] {
        return xs[n - 1] + s_hi * (v - ys[n - 1]);
    }
    let k = ys.partition_point(|&a| a <= v).saturating_sub(1).min(n - 2);
    let dy = ys[k + 1] - ys[k];
    if dy == 0.0 {
        return xs[k];
    }
    xs[k] + (v - ys[k]) / dy * (xs[k + 1] - xs[k])
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    WeightedL1,
    Huber { mu: f64 },
    Tabulated(Vec<ProxTable>),
}

/// Per-channel potential with weights `λ_n ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparablePotential {
    kind: PotentialKind,
    lambda: Vec<f64>,
}

/// JSON form `{"kind", "lambda", "mu", "knots"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: String,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

fn check_weights(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::EmptyInput("potential weights"));
    }
    if let Some(l) = lambda.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::invalid(format!("channel weight {l} must be finite and ≥ 0")));
    }
    Ok(())
}

impl SeparablePotential {
    pub fn weighted_l1(lambda: Vec<f64>) -> Result<Self> {
        check_weights(&lambda)?;
        Ok(Self {
            kind: PotentialKind::WeightedL1,
            lambda,
        })
    }

    pub fn huber(lambda: Vec<f64>, mu: f64) -> Result<Self> {
        check_weights(&lambda)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("Huber width mu must be positive, got {mu}")));
        }
        Ok(Self {
            kind: PotentialKind::Huber { mu },
            lambda,
        })
    }

    pub fn tabulated(tables: Vec<ProxTable>, lambda: Option<Vec<f64>>) -> Result<Self> {
        let lambda = lambda.unwrap_or_else(|| vec![1.0; tables.len()]);
        check_weights(&lambda)?;
        if lambda.len() != tables.len() {
            return Err(Error::dims(tables.len(), lambda.len(), "tabulated potential weights"));
        }
        Ok(Self {
            kind: PotentialKind::Tabulated(tables),
            lambda,
        })
    }

    /// Weighted ℓ1 that leaves the lowpass channel 0 free and weights every
    /// detail channel by `lam`.
    pub fn detail_l1(n_chan: usize, lam: f64) -> Result<Self> {
        let mut l = vec![lam; n_chan];
        if let Some(first) = l.first_mut() {
            *first = 0.0;
        }
        Self::weighted_l1(l)
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        match spec.kind.as_str() {
            "weighted_l1" => Self::weighted_l1(spec.lambda.clone()),
            "huber" => Self::huber(spec.lambda.clone(), spec.mu.unwrap_or(DEFAULT_HUBER_MU)),
            "tabulated" => {
                let knots = spec
                    .knots
                    .as_ref()
                    .ok_or_else(|| Error::invalid("tabulated potential needs \"knots\""))?;
                let tables = knots
                    .iter()
                    .map(|(x, y)| ProxTable::new(x.clone(), y.clone()))
                    .collect::<Result<Vec<_>>>()?;
                let lambda = if spec.lambda.is_empty() {
                    None
                } else {
                    Some(spec.lambda.clone())
                };
                Self::tabulated(tables, lambda)
            }
            other => Err(Error::invalid(format!("unknown potential kind '{other}'"))),
        }
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let (mu, knots) = match &self.kind {
            PotentialKind::WeightedL1 => (None, None),
            PotentialKind::Huber { mu } => (Some(*mu), None),
            PotentialKind::Tabulated(t) => (
                None,
                Some(t.iter().map(|t| (t.x.clone(), t.y.clone())).collect()),
            ),
        };
        PotentialSpec {
            kind: self.kind_name().to_string(),
            lambda: self.lambda.clone(),
            mu,
            knots,
        }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PotentialKind::WeightedL1 => "weighted_l1",
            PotentialKind::Huber { .. } => "huber",
            PotentialKind::Tabulated(_) => "tabulated",
        }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn n_chan(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_differentiable(&self) -> bool {
        match &self.kind {
            PotentialKind::WeightedL1 => false,
            PotentialKind::Huber { .. } => true,
            PotentialKind::Tabulated(t) => t.iter().all(ProxTable::all_slopes_positive),
        }
    }

    /// Lipschitz constant of the gradient `z ↦ λ_n φ_n'(z)`, if it exists.
    pub fn curvature_bound(&self) -> Option<f64> {
        if !self.is_differentiable() {
            return None;
        }
        let lmax = self.lambda.iter().cloned().fold(0.0, f64::max);
        Some(match &self.kind {
            PotentialKind::Huber { mu } => lmax / mu,
            PotentialKind::Tabulated(tables) => tables
                .iter()
                .zip(&self.lambda)
                .map(|(t, l)| {
                    let smin = (0..t.x.len() - 1).map(|k| t.slope(k)).fold(1.0, f64::min);
                    l * (1.0 / smin - 1.0)
                })
                .fold(0.0, f64::max),
            PotentialKind::WeightedL1 => unreachable!(),
        })
    }

    /// Same potential with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let lambda = self.lambda.iter().map(|l| l * factor).collect::<Vec<_>>();
        check_weights(&lambda)?;
        Ok(Self {
            kind: self.kind.clone(),
            lambda,
        })
    }

    fn check_stack(&self, z: &ChannelStack) -> Result<()> {
        if z.n_chan != self.n_chan() {
            return Err(Error::dims(self.n_chan(), z.n_chan, "potential channel count"));
        }
        Ok(())
    }

    /// Scalar prox of `t·λ_c·φ_c` at `v`.
    pub fn prox_scalar(&self, c: usize, v: f64, tau: f64) -> f64 {
        let t = tau * self.lambda[c];
        match &self.kind {
            PotentialKind::WeightedL1 => shrink(v, t),
            PotentialKind::Huber { mu } => huber_prox(v, t, *mu),
            PotentialKind::Tabulated(tables) => tables[c].rescaled(t).eval(v),
        }
    }

    /// Channel-wise `prox_{τΦ}`.
    pub fn prox(&self, z: &ChannelStack, tau: f64) -> Result<ChannelStack> {
        self.check_stack(z)?;
        if !(tau >= 0.0) {
            return Err(Error::invalid(format!("tau must be nonnegative, got {tau}")));
        }
        let mut out = z.clone();
        self.prox_in_place(&mut out.data, z.plane(), tau);
        Ok(out)
    }

    pub(crate) fn prox_in_place(&self, data: &mut [f64], plane: usize, tau: f64) {
        for (c, chunk) in data.chunks_mut(plane).enumerate() {
            let t = tau * self.lambda[c];
            if t == 0.0 {
                continue;
            }
            match &self.kind {
                PotentialKind::WeightedL1 => chunk.iter_mut().for_each(|v| *v = shrink(*v, t)),
                PotentialKind::Huber { mu } => {
                    chunk.iter_mut().for_each(|v| *v = huber_prox(*v, t, *mu))
                }
                PotentialKind::Tabulated(tables) => {
                    let table = tables[c].rescaled(t);
                    chunk.iter_mut().for_each(|v| *v = table.eval(*v));
                }
            }
        }
    }

    /// Channel-wise gradient `λ_n φ_n'(z)`.
    pub fn grad(&self, z: &ChannelStack) -> Result<ChannelStack> {
        self.check_stack(z)?;
        let mut out = z.clone();
        self.grad_in_place(&mut out.data, z.plane())?;
        Ok(out)
    }

    pub(crate) fn grad_in_place(&self, data: &mut [f64], plane: usize) -> Result<()> {
        if !self.is_differentiable() {
            return Err(Error::Unsupported(format!(
                "{} potential has no gradient (use a prox-based solver)",
                self.kind_name()
            )));
        }
        for (c, chunk) in data.chunks_mut(plane).enumerate() {
            let l = self.lambda[c];
            match &self.kind {
                PotentialKind::Huber { mu } => {
                    chunk.iter_mut().for_each(|v| *v = l * (*v / mu).clamp(-1.0, 1.0))
                }
                PotentialKind::Tabulated(tables) => {
                    chunk.iter_mut().for_each(|v| *v = l * tables[c].derivative(*v))
                }
                PotentialKind::WeightedL1 => unreachable!(),
            }
        }
        Ok(())
    }

    /// `Σ_n λ_n Σ φ_n(z)`.
    pub fn value(&self, z: &ChannelStack) -> Result<f64> {
        self.check_stack(z)?;
        Ok(self.value_slice(&z.data, z.plane()))
    }

    pub(crate) fn value_slice(&self, data: &[f64], plane: usize) -> f64 {
        let mut total = 0.0;
        for (c, chunk) in data.chunks(plane).enumerate() {
            let l = self.lambda[c];
            if l == 0.0 {
                continue;
            }
            let s: f64 = match &self.kind {
                PotentialKind::WeightedL1 => chunk.iter().map(|v| v.abs()).sum(),
                PotentialKind::Huber { mu } => chunk.iter().map(|v| huber_value(*v, *mu)).sum(),
                PotentialKind::Tabulated(tables) => chunk.iter().map(|v| tables[c].value(*v)).sum(),
            };
            total += l * s;
        }
        total
    }
}

/// `φ(x) = x²/(2μ)` for `|x| ≤ μ`, `|x| − μ/2` otherwise.
pub fn huber_value(x: f64, mu: f64) -> f64 {
    let a = x.abs();
    if a <= mu {
        0.5 * x * x / mu
    } else {
        a - 0.5 * mu
    }
}

/// Prox of `t·huber_μ`.
pub fn huber_prox(x: f64, t: f64, mu: f64) -> f64 {
    if x.abs() <= mu + t {
        x * mu / (mu + t)
    } else {
        x - t * x.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(n_chan: usize, vals: &[f64]) -> ChannelStack {
        ChannelStack::from_vec(n_chan, 1, vals.len() / n_chan, vals.to_vec()).unwrap()
    }

    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=n {
            let u = lo + i as f64 * step;
            let v = f(u);
            if v < best.0 {
                best = (v, u);
            }
        }
        best.1
    }

    #[test]
    fn huber_small_mu_approaches_soft_threshold() {
        let p = SeparablePotential::huber(vec![1.0], 1e-6).unwrap();
        assert!((p.prox_scalar(0, 1.5, 1.0) - 0.5).abs() < 1e-5);
    }

    #[test]
    fn weighted_l1_lowpass_passes_through() {
        let p = SeparablePotential::weighted_l1(vec![0.0, 1.0]).unwrap();
        let out = p.prox(&stack(2, &[5.0, -0.3, 0.4, 2.0]), 1.0).unwrap();
        assert_eq!(out.data, vec![5.0, -0.3, 0.0, 1.0]);
    }

    #[test]
    fn identity_table_is_identity() {
        let p = SeparablePotential::tabulated(vec![ProxTable::identity()], None).unwrap();
        for v in [-3.0, -0.2, 0.0, 0.7, 12.0] {
            assert!((p.prox_scalar(0, v, 1.0) - v).abs() <= 1e-15 * v.abs().max(1.0));
            assert!((p.prox_scalar(0, v, 0.3) - v).abs() <= 1e-15 * v.abs().max(1.0));
        }
        assert!(p.value(&stack(1, &[0.4, -2.0])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn soft_threshold_table_rescales_like_l1() {
        let p = SeparablePotential::tabulated(vec![ProxTable::soft_threshold(0.5).unwrap()], None)
            .unwrap();
        for t in [0.5, 1.0, 2.0] {
            for v in [-3.0, -0.4, 0.2, 1.1, 4.0] {
                assert!((p.prox_scalar(0, v, t) - shrink(v, 0.5 * t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_validation() {
        assert!(ProxTable::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(ProxTable::new(vec![-1.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(ProxTable::new(vec![-1.0, 1.0], vec![-3.0, 3.0]).is_err());
        assert!(ProxTable::new(vec![-1.0, 1.0], vec![-0.5, 1.0]).is_err());
        assert!(ProxTable::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn tabulated_prox_matches_grid_minimization() {
        // p has slopes 1/2 then 1; the prox of t·φ is checked against a
        // direct minimization of ½(x − u)² + t φ(u).
        let table = ProxTable::new(vec![-2.0, -1.0, 1.0, 2.0], vec![-1.5, -0.5, 0.5, 1.5]).unwrap();
        let p = SeparablePotential::tabulated(vec![table.clone()], None).unwrap();
        for t in [0.5, 1.0, 1.7] {
            for x in [-2.5, -0.9, 0.3, 1.2, 3.0] {
                let u = grid_argmin(|u| 0.5 * (x - u) * (x - u) + t * table.value(u), -4.0, 4.0, 1e-4);
                assert!((p.prox_scalar(0, x, t) - u).abs() < 1e-3, "t={t} x={x}");
            }
        }
    }

    #[test]
    fn huber_prox_matches_grid_minimization() {
        for (x, t, mu) in [(1.5, 1.0, 0.1), (0.05, 0.5, 0.2), (-2.0, 0.3, 0.5)] {
            let u = grid_argmin(|u| 0.5 * (x - u) * (x - u) + t * huber_value(u, mu), -3.0, 3.0, 1e-4);
            assert!((huber_prox(x, t, mu) - u).abs() < 1e-3);
        }
    }

    #[test]
    fn gradients() {
        let p = SeparablePotential::huber(vec![2.0], 0.1).unwrap();
        let g = p.grad(&stack(1, &[0.05, 1.0, -3.0])).unwrap();
        assert_eq!(g.data, vec![1.0, 2.0, -2.0]);
        let l1 = SeparablePotential::weighted_l1(vec![1.0]).unwrap();
        assert!(matches!(l1.grad(&stack(1, &[1.0])), Err(Error::Unsupported(_))));
        let table = ProxTable::new(vec![-2.0, 2.0], vec![-1.0, 1.0]).unwrap();
        let p = SeparablePotential::tabulated(vec![table], None).unwrap();
        // p(x) = x/2 is the prox of φ(u) = u²/2, whose derivative is u.
        let g = p.grad(&stack(1, &[0.3, -5.0])).unwrap();
        assert!((g.data[0] - 0.3).abs() < 1e-15 && (g.data[1] + 5.0).abs() < 1e-12);
        assert!((p.value(&stack(1, &[3.0])).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trip() {
        let t = ProxTable::soft_threshold(0.2).unwrap();
        for p in [
            SeparablePotential::weighted_l1(vec![0.0, 1.0]).unwrap(),
            SeparablePotential::huber(vec![1.0, 2.0], 0.05).unwrap(),
            SeparablePotential::tabulated(vec![t], None).unwrap(),
        ] {
            let json = serde_json::to_string(&p.to_spec()).unwrap();
            let back: PotentialSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(SeparablePotential::from_spec(&back).unwrap(), p);
        }
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(SeparablePotential::weighted_l1(vec![-1.0]).is_err());
        assert!(SeparablePotential::huber(vec![1.0], 0.0).is_err());
    }
}
