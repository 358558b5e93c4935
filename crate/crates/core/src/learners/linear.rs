use crate::error::{check_len, Result};
use crate::numerics::linalg::dot_unchecked;

/// Arguments beyond this magnitude are treated with the asymptotic form.
const EXP_CLAMP: f64 = 500.0;

/// `½(⟨w,x⟩ − y)² + (λ/2)‖w‖²`
pub fn lsr_loss(x: &[f64], y: f64, w: &[f64], lambda: f64) -> f64 {
    let r = dot_unchecked(w, x) - y;
    0.5 * r * r + 0.5 * lambda * dot_unchecked(w, w)
}

/// `(⟨w,x⟩ − y)x + λw`
pub fn lsr_grad(x: &[f64], y: f64, w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_len("lsr_grad", w.len(), x.len())?;
    let r = dot_unchecked(w, x) - y;
    Ok(x.iter().zip(w).map(|(xi, wi)| r * xi + lambda * wi).collect())
}

/// `log(1 + exp(−m))`, linear beyond the clamp.
fn softplus_neg(m: f64) -> f64 {
    if -m > EXP_CLAMP {
        -m
    } else if -m < -EXP_CLAMP {
        0.0
    } else {
        (-m).exp().ln_1p()
    }
}

/// `log(1 + exp(−y⟨w,x⟩)) + (λ/2)‖w‖²`
pub fn lr_loss(x: &[f64], y: f64, w: &[f64], lambda: f64) -> f64 {
    softplus_neg(y * dot_unchecked(w, x)) + 0.5 * lambda * dot_unchecked(w, w)
}

/// Scalar `c` with `∇_w log(1+exp(−y z)) = c·x`, i.e. `−y / (1 + exp(y z))`.
pub(crate) fn lr_coef(z: f64, y: f64) -> f64 {
    let m = y * z;
    if m > EXP_CLAMP {
        0.0
    } else if m < -EXP_CLAMP {
        -y
    } else {
        -y / (1.0 + m.exp())
    }
}

/// `−yx / (1 + exp(y⟨w,x⟩)) + λw`
pub fn lr_grad(x: &[f64], y: f64, w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_len("lr_grad", w.len(), x.len())?;
    let c = lr_coef(dot_unchecked(w, x), y);
    Ok(x.iter().zip(w).map(|(xi, wi)| c * xi + lambda * wi).collect())
}
