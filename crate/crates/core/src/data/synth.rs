use super::{Example, LabelKind, Pool};
use crate::error::{Error, Result};
use crate::numerics::{linalg::dot_unchecked, SeededRng};

/// `y = ⟨w*,x⟩ + b + noise_sd·ε` with `x ~ N(0, I_d)`, `ε ~ N(0,1)`.
pub fn gen_linreg(n: usize, d: usize, w_star: &[f64], b: f64, noise_sd: f64, seed: u64) -> Result<Pool> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArg(format!("gen_linreg needs n, d > 0 (n={n}, d={d})")));
    }
    if w_star.len() != d {
        return Err(Error::DimMismatch { op: "gen_linreg", expected: d, got: w_star.len() });
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidArg(format!("noise_sd must be >= 0, got {noise_sd}")));
    }
    let mut rng = SeededRng::new(seed);
    let examples = (0..n)
        .map(|id| {
            let x = rng.normal_vec(d, 1.0);
            let noise = rng.normal();
            let y = dot_unchecked(w_star, &x) + b + noise_sd * noise;
            Example { id, x, y: vec![y] }
        })
        .collect();
    Pool::new(examples, LabelKind::Regression, seed)
}

/// Two identity-covariance Gaussians at `±(offset,…,offset)` labelled `±1`, shuffled.
pub fn gen_gaussian_clusters(n_per_class: usize, d: usize, offset: f64, seed: u64) -> Result<Pool> {
    if n_per_class == 0 || d == 0 {
        return Err(Error::InvalidArg("gen_gaussian_clusters needs n_per_class, d > 0".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut raw = Vec::with_capacity(2 * n_per_class);
    for label in [1.0, -1.0] {
        for _ in 0..n_per_class {
            let x: Vec<f64> = (0..d).map(|_| label * offset + rng.normal()).collect();
            raw.push((x, label));
        }
    }
    rng.shuffle(&mut raw);
    let examples = raw.into_iter().enumerate().map(|(id, (x, y))| Example { id, x, y: vec![y] }).collect();
    Pool::new(examples, LabelKind::Binary, seed)
}

/// Two interleaving half circles in 2-D.
///
/// With `t_i = π·i/(n−1)`, class `+1` lies on the upper unit arc `(cos t, sin t)`
/// and class `−1` on the lower arc `(1 − cos t, 0.5 − sin t)`, i.e. the same arc
/// reflected and shifted by `(1, 0.5)`. Gaussian noise of sd `noise_sd` is added
/// to both coordinates, then the pool is shuffled.
pub fn gen_half_moon(n_per_class: usize, noise_sd: f64, seed: u64) -> Result<Pool> {
    if n_per_class == 0 || !(noise_sd >= 0.0) {
        return Err(Error::InvalidArg("gen_half_moon needs n_per_class > 0 and noise_sd >= 0".into()));
    }
    let mut rng = SeededRng::new(seed);
    let ts: Vec<f64> = (0..n_per_class)
        .map(|i| if n_per_class == 1 { 0.0 } else { std::f64::consts::PI * i as f64 / (n_per_class - 1) as f64 })
        .collect();
    let mut raw = Vec::with_capacity(2 * n_per_class);
    for &t in &ts {
        raw.push((vec![t.cos(), t.sin()], 1.0));
    }
    for &t in &ts {
        raw.push((vec![1.0 - t.cos(), 0.5 - t.sin()], -1.0));
    }
    for (x, _) in raw.iter_mut() {
        for v in x.iter_mut() {
            *v += noise_sd * rng.normal();
        }
    }
    rng.shuffle(&mut raw);
    let examples = raw.into_iter().enumerate().map(|(id, (x, y))| Example { id, x, y: vec![y] }).collect();
    Pool::new(examples, LabelKind::Binary, seed)
}
