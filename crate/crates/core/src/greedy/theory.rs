//! Teachers that realize a prescribed gradient rescaling `∇ℓ(y) = g(y)·∇ℓ(ỹ)`.

use crate::data::Pool;
use crate::error::{check_len, Error, Result};
use crate::learners::{Learner, LearnerKind};
use crate::numerics::linalg::{cholesky_solve, dot_unchecked, norm2, sq_norm, Matrix};

/// Softplus `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Scalar `g(y)` with `∇ℓ(x,y|w) = g(y)·∇ℓ(x,ỹ|w)` for the data term.
///
/// LSR: `(⟨w,x⟩ − y)/(⟨w,x⟩ − ỹ)`; LR: `y(1+e^{ỹ⟨w,x⟩}) / (ỹ(1+e^{y⟨w,x⟩}))`.
/// Degenerate denominators return [`Error::Degenerate`]; callers fall back to
/// minimizing `G` directly.
pub fn g_scalar(learner: &Learner, y: f64, x: &[f64], y_true: f64, w: &[f64]) -> Result<f64> {
    check_len("g_scalar", w.len(), x.len())?;
    let z = dot_unchecked(w, x);
    match learner.kind {
        LearnerKind::Lsr => {
            let den = z - y_true;
            if den == 0.0 {
                return Err(Error::Degenerate("⟨w,x⟩ equals the ground-truth label".into()));
            }
            Ok((z - y) / den)
        }
        LearnerKind::Lr => {
            if y_true == 0.0 {
                return Err(Error::Degenerate("ground-truth label is zero".into()));
            }
            Ok(y / y_true * (softplus(y_true * z) - softplus(y * z)).exp())
        }
        _ => Err(Error::Incompatible("g_scalar is defined for scalar-label learners".into())),
    }
}

/// Gain teacher: `w′ = w − η·c1‖w − w*‖·∇ℓ(x,ỹ|w)`.
pub fn et_gain_teacher(learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64], w_star: &[f64], eta: f64, c1: f64) -> Result<Vec<f64>> {
    check_len("et_gain_teacher target", w.len(), w_star.len())?;
    let grad = learner.grad(w, x, y_true)?;
    let g = c1 * norm2(&crate::numerics::linalg::sub(w, w_star));
    Ok(w.iter().zip(&grad).map(|(wi, gi)| wi - eta * g * gi).collect())
}

/// The least-squares label realizing gain `g`: solves `g_scalar(y) = g`, i.e.
/// `y = ⟨w,x⟩ − g(⟨w,x⟩ − ỹ)`.
pub fn lsr_label_for_gain(x: &[f64], y_true: f64, w: &[f64], g: f64) -> f64 {
    let z = dot_unchecked(w, x);
    z - g * (z - y_true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoConfig {
    pub c2: f64,
    pub factor: f64,
    pub g_max: f64,
    pub k_max: usize,
    /// Effective step `η·g` used when no grid point passes the test.
    pub eta_min: f64,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        Self { c2: 0.5, factor: 0.5, g_max: 1e4, k_max: 80, eta_min: 1e-8 }
    }
}

impl ArmijoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.c2) {
            return Err(Error::InvalidArg(format!("c2 must lie in [0.5, 1), got {}", self.c2)));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) || !(self.g_max > 0.0) || !(self.eta_min > 0.0) {
            return Err(Error::InvalidArg("Armijo factor must be in (0,1); g_max, eta_min > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoStep {
    pub g: f64,
    /// Grid exponent of the accepted `g`; `None` when the fallback was used.
    pub k: Option<usize>,
    pub w_new: Vec<f64>,
    pub loss_before: f64,
    pub loss_after: f64,
    pub grad_sq: f64,
}

/// Largest `g = g_max·factor^k` with `ℓ(w − ηg∇ℓ) ≤ ℓ(w) − c2·η·g·‖∇ℓ‖²`. Needs no `w*`.
pub fn armijo_teacher(learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64], eta: f64, cfg: &ArmijoConfig) -> Result<ArmijoStep> {
    cfg.validate()?;
    let grad = learner.grad(w, x, y_true)?;
    let grad_sq = sq_norm(&grad);
    if grad_sq == 0.0 {
        return Err(Error::Degenerate("zero gradient: Armijo step undefined".into()));
    }
    let loss_before = learner.loss(w, x, y_true)?;
    let step = |g: f64| -> Vec<f64> { w.iter().zip(&grad).map(|(wi, gi)| wi - eta * g * gi).collect() };
    let mut g = cfg.g_max;
    for k in 0..=cfg.k_max {
        let w_new = step(g);
        let loss_after = learner.loss(&w_new, x, y_true)?;
        if loss_after <= loss_before - cfg.c2 * eta * g * grad_sq {
            return Ok(ArmijoStep { g, k: Some(k), w_new, loss_before, loss_after, grad_sq });
        }
        g *= cfg.factor;
    }
    let g = cfg.eta_min / eta;
    let w_new = step(g);
    let loss_after = learner.loss(&w_new, x, y_true)?;
    Ok(ArmijoStep { g, k: None, w_new, loss_before, loss_after, grad_sq })
}

/// `w − H⁻¹∇f` with `H` evaluated at `αw* + (1−α)w`.
pub fn newton_last_step(
    grad_f: impl Fn(&[f64]) -> Vec<f64>,
    hess_f: impl Fn(&[f64]) -> Matrix,
    w: &[f64],
    w_star: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    check_len("newton_last_step", w.len(), w_star.len())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArg(format!("alpha must lie in [0,1], got {alpha}")));
    }
    let at: Vec<f64> = w.iter().zip(w_star).map(|(a, b)| alpha * b + (1.0 - alpha) * a).collect();
    let dir = cholesky_solve(&hess_f(&at), &grad_f(w))?;
    Ok(w.iter().zip(&dir).map(|(a, d)| a - d).collect())
}

/// Hessian `XᵀX/n + λR` and `Xᵀy/n` of the pool-average least-squares objective
/// (`R` is the regularization mask).
pub fn lsr_normal_equations(learner: &Learner, pool: &Pool) -> Result<(Matrix, Vec<f64>)> {
    if learner.kind != LearnerKind::Lsr {
        return Err(Error::Incompatible("normal equations need an LSR learner".into()));
    }
    check_len("lsr_normal_equations", learner.dim, pool.dim())?;
    let d = learner.dim;
    let n = pool.len() as f64;
    let mut h = vec![0.0; d * d];
    let mut c = vec![0.0; d];
    for e in pool.examples() {
        for i in 0..d {
            c[i] += e.x[i] * e.y[0] / n;
            for j in 0..d {
                h[i * d + j] += e.x[i] * e.x[j] / n;
            }
        }
    }
    for (i, m) in learner.reg_mask().iter().enumerate() {
        h[i * d + i] += learner.lambda * m;
    }
    Ok((Matrix::new(d, d, h)?, c))
}

/// Newton-rescaled teacher on the pool-average LSR objective. The Hessian is
/// constant, so any `α` lands on the ridge solution in one step.
pub fn newton_last_teacher(learner: &Learner, pool: &Pool, w: &[f64], w_star: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let (h, c) = lsr_normal_equations(learner, pool)?;
    let grad = |v: &[f64]| -> Vec<f64> {
        let hv = crate::numerics::matvec(&h, v).expect("dims checked");
        hv.iter().zip(&c).map(|(a, b)| a - b).collect()
    };
    newton_last_step(grad, |_| h.clone(), w, w_star, alpha)
}

/// Validated knobs of the three rescaling teachers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConfig {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

impl TheoryConfig {
    pub fn new(c1: f64, c2: f64, alpha: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(0.5..1.0).contains(&c2) || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArg(format!("need c1 > 0, c2 in [0.5,1), alpha in [0,1] (got {c1}, {c2}, {alpha})")));
        }
        Ok(Self { c1, c2, alpha })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    #[test]
    fn g_identity_holds() {
        let mut r = SeededRng::new(1);
        for kind in [LearnerKind::Lsr, LearnerKind::Lr] {
            let l = Learner::new(kind, 4, 0.0, false).unwrap();
            for _ in 0..100 {
                let x = r.normal_vec(4, 1.0);
                let w = r.normal_vec(4, 1.0);
                let yt = if kind == LearnerKind::Lr { if r.uniform() < 0.5 { -1.0 } else { 1.0 } } else { r.normal() };
                let y = r.normal() * 2.0;
                let g = g_scalar(&l, y, &x, yt, &w).unwrap();
                let gy = l.grad(&w, &x, &[y]).unwrap();
                let gt = l.grad(&w, &x, &[yt]).unwrap();
                let err: f64 = gy.iter().zip(&gt).map(|(a, b)| (a - g * b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10, "{kind:?} err {err}");
                assert!((g_scalar(&l, yt, &x, yt, &w).unwrap() - 1.0).abs() < 1e-15);
            }
        }
        let l = Learner::new(LearnerKind::Lsr, 2, 0.0, false).unwrap();
        let w = [1.0, 2.0];
        let x = [0.5, 0.25];
        assert_eq!(g_scalar(&l, 1.0, &x, 0.0, &w).unwrap(), 0.0);
        assert!(g_scalar(&l, 0.3, &x, 1.0, &w).is_err());
    }

    #[test]
    fn et_fixed_point_and_label_realization() {
        let l = Learner::new(LearnerKind::Lsr, 3, 0.0, false).unwrap();
        let mut r = SeededRng::new(2);
        let ws = r.normal_vec(3, 1.0);
        let x = r.normal_vec(3, 1.0);
        let yt = dot_unchecked(&ws, &x);
        assert_eq!(et_gain_teacher(&l, &x, &[yt], &ws, &ws, 0.1, 2.0).unwrap(), ws);
        for _ in 0..50 {
            let w = r.normal_vec(3, 1.0);
            let x = r.normal_vec(3, 1.0);
            let yt = r.normal();
            let c1 = 0.7;
            let w_et = et_gain_teacher(&l, &x, &[yt], &w, &ws, 0.1, c1).unwrap();
            let g = c1 * norm2(&crate::numerics::linalg::sub(&w, &ws));
            let y = lsr_label_for_gain(&x, yt, &w, g);
            let w_lab = crate::learners::sgd_step(&w, &l.grad(&w, &x, &[y]).unwrap(), 0.1).unwrap();
            for (a, b) in w_et.iter().zip(&w_lab) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn armijo_postcondition_and_quadratic_bound() {
        let l = Learner::new(LearnerKind::Lsr, 3, 0.0, false).unwrap();
        let cfg = ArmijoConfig { g_max: 1e6, ..Default::default() };
        let mut r = SeededRng::new(3);
        for _ in 0..200 {
            let w = r.normal_vec(3, 1.0);
            let x = r.normal_vec(3, 1.0);
            let y = r.normal();
            let eta = 0.05;
            let s = armijo_teacher(&l, &x, &[y], &w, eta, &cfg).unwrap();
            assert!(s.k.is_some());
            assert!(s.loss_after <= s.loss_before - cfg.c2 * eta * s.g * s.grad_sq);
            assert!(eta * s.g <= 2.0 * (1.0 - cfg.c2) / sq_norm(&x) * (1.0 + 1e-12));
        }
        let w = [1.0, 0.0, 0.0];
        assert!(matches!(armijo_teacher(&l, &[1.0, 0.0, 0.0], &[1.0], &w, 0.1, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn newton_matches_classic_step_on_nonquadratic() {
        // f(w) = Σ exp(w_i) + ½‖w‖², classic Newton at w.
        let grad = |w: &[f64]| w.iter().map(|v| v.exp() + v).collect::<Vec<_>>();
        let hess = |w: &[f64]| Matrix::from_fn(w.len(), w.len(), |i, j| if i == j { w[i].exp() + 1.0 } else { 0.0 });
        let w = [0.3, -1.2, 2.0];
        let step = newton_last_step(grad, hess, &w, &[9.0, 9.0, 9.0], 0.0).unwrap();
        for i in 0..3 {
            let classic = w[i] - (w[i].exp() + w[i]) / (w[i].exp() + 1.0);
            assert!((step[i] - classic).abs() < 1e-14);
        }
    }

    #[test]
    fn newton_rank_deficient_errors() {
        use crate::data::{Example, LabelKind};
        let ex = (0..5).map(|i| Example { id: i, x: vec![i as f64, 2.0 * i as f64], y: vec![1.0] }).collect();
        let pool = Pool::new(ex, LabelKind::Regression, 0).unwrap();
        let l = Learner::new(LearnerKind::Lsr, 2, 0.0, false).unwrap();
        assert!(matches!(newton_last_teacher(&l, &pool, &[0.0, 0.0], &[0.0, 0.0], 0.5), Err(Error::Singular(_))));
    }
}
