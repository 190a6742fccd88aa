use crate::error::{Error, Result};

/// Component-wise shrinkage `sign(z)·max(|z| − τλ_n, 0)`.
pub fn soft_threshold(z: &[f64], thresholds: &[f64], tau: f64) -> Result<Vec<f64>> {
    if thresholds.len() != z.len() {
        return Err(Error::dims(z.len(), thresholds.len(), "soft_threshold thresholds"));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::invalid(format!("negative threshold {t}")));
    }
    Ok(z.iter()
        .zip(thresholds)
        .map(|(&v, &l)| shrink(v, tau * l))
        .collect())
}

#[inline]
pub(crate) fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` by sort and threshold.
pub fn project_l1_ball(z: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    Ok(project_l1_unchecked(z, radius))
}

pub(crate) fn project_l1_unchecked(z: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return z.to_vec();
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let mu = (cumsum - radius) / (k + 1) as f64;
        if mu < m {
            theta = mu;
        } else {
            break;
        }
    }
    z.iter().map(|&v| shrink(v, theta)).collect()
}

/// Proximal map of `τλ‖·‖_∞` through the Moreau identity
/// `prox(z) = z − P_{τλ B₁}(z)`.
pub fn prox_linf(z: &[f64], tau_lambda: f64) -> Result<Vec<f64>> {
    if !(tau_lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "tau_lambda must be nonnegative, got {tau_lambda}"
        )));
    }
    if tau_lambda == 0.0 {
        return Ok(z.to_vec());
    }
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= tau_lambda {
        return Ok(vec![0.0; z.len()]);
    }
    let p = project_l1_unchecked(z, tau_lambda);
    Ok(z.iter().zip(&p).map(|(a, b)| a - b).collect())
}

/// Projection onto the box `|u_n| ≤ bound_n`.
pub(crate) fn clip_in_place(z: &mut [f64], bound: f64) {
    for v in z {
        *v = v.clamp(-bound, bound);
    }
}
