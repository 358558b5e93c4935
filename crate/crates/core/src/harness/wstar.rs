//! Reference weights `w* = argmin_w mean_i ℓ(x_i, ỹ_i | w)`.

use crate::data::Pool;
use crate::error::{Error, Result};
use crate::greedy::lsr_normal_equations;
use crate::learners::{Learner, LearnerKind};
use crate::numerics::linalg::cholesky_solve;
use crate::numerics::{norm2, sigmoid, softmax, Matrix, SeededRng};

/// Gradient-norm tolerance for the iterative solvers.
pub const WSTAR_TOL: f64 = 1e-8;
const NEWTON_ITERS: usize = 200;
const MLP_ITERS: usize = 20_000;
const MLP_STEP: f64 = 0.5;
/// Seed of the reference MLP training run.
pub const MLP_REFERENCE_SEED: u64 = 0x5eed;

/// Pool-average objective including the regularizer.
pub fn pool_objective(learner: &Learner, pool: &Pool, w: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for e in pool.examples() {
        s += learner.loss(w, &e.x, &e.y)?;
    }
    Ok(s / pool.len() as f64)
}

pub fn pool_gradient(learner: &Learner, pool: &Pool, w: &[f64]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; w.len()];
    for e in pool.examples() {
        let gi = learner.grad(w, &e.x, &e.y)?;
        g.iter_mut().zip(&gi).for_each(|(a, b)| *a += b);
    }
    let n = pool.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

/// Pool-average Hessian of the linear learners.
fn pool_hessian(learner: &Learner, pool: &Pool, w: &[f64]) -> Matrix {
    let p = w.len();
    let d = learner.dim;
    let mut h = Matrix::zeros(p, p);
    let n = pool.len() as f64;
    for e in pool.examples() {
        let x = &e.x;
        match learner.kind {
            LearnerKind::Lr => {
                let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
                let y = e.y[0];
                let s = sigmoid(y * z);
                let c = s * (1.0 - s) * y * y / n;
                for i in 0..d {
                    for j in 0..d {
                        h.set(i, j, h.get(i, j) + c * x[i] * x[j]);
                    }
                }
            }
            LearnerKind::Multiclass { classes: k } => {
                let mut z = vec![0.0; k];
                for (i, xi) in x.iter().enumerate() {
                    for (j, zj) in z.iter_mut().enumerate() {
                        *zj += xi * w[i * k + j];
                    }
                }
                let pr = softmax(&z);
                let mass: f64 = e.y.iter().sum::<f64>() / n;
                for i in 0..d {
                    for i2 in 0..d {
                        let xx = x[i] * x[i2] * mass;
                        if xx == 0.0 {
                            continue;
                        }
                        for j in 0..k {
                            for j2 in 0..k {
                                let c = if j == j2 { pr[j] * (1.0 - pr[j]) } else { -pr[j] * pr[j2] };
                                let (r, col) = (i * k + j, i2 * k + j2);
                                h.set(r, col, h.get(r, col) + xx * c);
                            }
                        }
                    }
                }
            }
            _ => unreachable!("Hessian only for linear classifiers"),
        }
    }
    for (i, m) in learner.reg_mask().iter().enumerate() {
        h.set(i, i, h.get(i, i) + learner.lambda * m);
    }
    h
}

/// Damped Newton with backtracking; Levenberg shifts handle flat directions.
fn newton(learner: &Learner, pool: &Pool) -> Result<Vec<f64>> {
    let mut w = vec![0.0; learner.param_len()];
    let mut f = pool_objective(learner, pool, &w)?;
    for _ in 0..NEWTON_ITERS {
        let g = pool_gradient(learner, pool, &w)?;
        if norm2(&g) < WSTAR_TOL {
            return Ok(w);
        }
        let mut h = pool_hessian(learner, pool, &w);
        let scale = (0..h.rows()).map(|i| h.get(i, i)).fold(0.0f64, f64::max).max(1e-300);
        let mut shift = 0.0;
        let dir = loop {
            match cholesky_solve(&h, &g) {
                Ok(d) => break d,
                Err(Error::Singular(_)) if shift < scale => {
                    let next = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
                    for i in 0..h.rows() {
                        h.set(i, i, h.get(i, i) + next - shift);
                    }
                    shift = next;
                }
                Err(e) => return Err(e),
            }
        };
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = w.iter().zip(&dir).map(|(wi, di)| wi - t * di).collect();
            let fc = pool_objective(learner, pool, &cand)?;
            if fc <= f - 1e-4 * t * slope {
                w = cand;
                f = fc;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // No further decrease is representable; accept the current point if it is close enough.
                let gn = norm2(&g);
                return if gn < WSTAR_TOL * 1e3 {
                    Ok(w)
                } else {
                    Err(Error::Singular(format!("Newton stalled with gradient norm {gn:.3e}")))
                };
            }
        }
    }
    let gn = norm2(&pool_gradient(learner, pool, &w)?);
    if gn < WSTAR_TOL {
        Ok(w)
    } else {
        Err(Error::Singular(format!("no minimizer found (gradient norm {gn:.3e}); separable data needs lambda > 0")))
    }
}

/// Endpoint of a fixed-seed full-batch gradient-descent run.
fn mlp_reference(learner: &Learner, pool: &Pool) -> Result<Vec<f64>> {
    let (shape, _) = learner.mlp_shape().expect("mlp learner");
    let mut rng = SeededRng::new(MLP_REFERENCE_SEED);
    let mut w = rng.normal_vec(shape.v_len(), (1.0 / shape.d as f64).sqrt());
    w.extend(rng.normal_vec(shape.w_len(), (1.0 / shape.h as f64).sqrt()));
    for _ in 0..MLP_ITERS {
        let g = pool_gradient(learner, pool, &w)?;
        if norm2(&g) < WSTAR_TOL {
            break;
        }
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= MLP_STEP * gi);
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reference MLP training diverged".into()));
    }
    Ok(w)
}

/// Target weights for teaching.
///
/// Least squares solves the ridge normal equations directly. Linear
/// classifiers use damped Newton to gradient norm `< 1e-8`. The MLP target is
/// the endpoint of [`MLP_ITERS`] full-batch steps of size `0.5` from a
/// [`MLP_REFERENCE_SEED`] initialization (earlier if the gradient norm drops
/// below the tolerance).
pub fn compute_wstar(learner: &Learner, pool: &Pool) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    crate::error::check_len("compute_wstar", learner.dim, pool.dim())?;
    match learner.kind {
        LearnerKind::Lsr => {
            let (h, c) = lsr_normal_equations(learner, pool)?;
            cholesky_solve(&h, &c)
        }
        LearnerKind::Lr | LearnerKind::Multiclass { .. } => {
            let w = newton(learner, pool)?;
            // Without a ridge term a perfectly separated pool has no finite minimizer;
            // Newton only stops because the gradient underflows the tolerance.
            if learner.lambda == 0.0 && crate::param::pool_loss_acc(learner, &w, pool).1 == 1.0 {
                return Err(Error::Singular("separable data has no finite minimizer; set lambda > 0".into()));
            }
            Ok(w)
        }
        LearnerKind::Mlp { .. } => mlp_reference(learner, pool),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_gaussian_clusters, gen_linreg};
    use crate::numerics::{finite_diff_grad, rel_err};

    #[test]
    fn lsr_residual_is_orthogonal() {
        let pool = gen_linreg(200, 4, &[1.0, -2.0, 0.5, 3.0], 0.3, 0.1, 3).unwrap();
        let l = Learner::new(LearnerKind::Lsr, 4, 0.0, false).unwrap();
        let w = compute_wstar(&l, &pool).unwrap();
        let mut r = [0.0; 4];
        for e in pool.examples() {
            let res: f64 = e.x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - e.y[0];
            r.iter_mut().zip(&e.x).for_each(|(ri, xi)| *ri += xi * res);
        }
        assert!(norm2(&r) < 1e-8, "{r:?}");
    }

    #[test]
    fn ridge_path_shrinks() {
        let pool = gen_linreg(100, 3, &[1.0, 2.0, -1.0], 0.0, 0.5, 9).unwrap();
        let norms: Vec<f64> = [0.0, 0.1, 1.0]
            .iter()
            .map(|&lam| norm2(&compute_wstar(&Learner::new(LearnerKind::Lsr, 3, lam, false).unwrap(), &pool).unwrap()))
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
    }

    #[test]
    fn separable_lr_with_ridge_converges() {
        let pool = gen_gaussian_clusters(50, 3, 5.0, 2).unwrap();
        let l = Learner::new(LearnerKind::Lr, 3, 1e-3, false).unwrap();
        let w = compute_wstar(&l, &pool).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
        assert!(norm2(&pool_gradient(&l, &pool, &w).unwrap()) < WSTAR_TOL);
        let unreg = Learner::new(LearnerKind::Lr, 3, 0.0, false).unwrap();
        assert!(compute_wstar(&unreg, &pool).is_err());
    }

    #[test]
    fn multiclass_with_unregularized_bias() {
        let pool = gen_gaussian_clusters(60, 2, 0.5, 4).unwrap().with_bias().binary_as_classes().unwrap();
        let l = Learner::new(LearnerKind::Multiclass { classes: 2 }, 3, 1e-2, true).unwrap();
        let w = compute_wstar(&l, &pool).unwrap();
        assert!(norm2(&pool_gradient(&l, &pool, &w).unwrap()) < WSTAR_TOL);
    }

    #[test]
    fn hessians_match_finite_differences() {
        let pool = gen_gaussian_clusters(10, 3, 0.5, 1).unwrap();
        let mc = pool.binary_as_classes().unwrap();
        let cases = [
            (Learner::new(LearnerKind::Lr, 3, 0.1, false).unwrap(), &pool),
            (Learner::new(LearnerKind::Multiclass { classes: 2 }, 3, 0.1, false).unwrap(), &mc),
        ];
        for (l, p) in cases {
            let w = SeededRng::new(5).normal_vec(l.param_len(), 0.5);
            let h = pool_hessian(&l, p, &w);
            for i in 0..w.len() {
                let col = finite_diff_grad(|v| pool_gradient(&l, p, v).unwrap()[i], &w, 1e-5).unwrap();
                let row: Vec<f64> = (0..w.len()).map(|j| h.get(i, j)).collect();
                assert!(rel_err(&row, &col, 1e-6) < 1e-5);
            }
        }
    }
}
