use super::discrepancy::{ScalarModel, VectorModel};
use super::{Anchor, LabelConstraint, PNorm};
use crate::error::{check_len, Error, Result};
use crate::learners::{Learner, LearnerKind};
use crate::numerics::linalg::{cholesky_solve, dot_unchecked, sq_norm, Matrix};
use crate::numerics::{minimize_1d, project_simplex};

/// Projected-gradient iterations used for simplex-constrained vector labels.
pub const SIMPLEX_ITERS: usize = 100;
/// Step of the simplex projected gradient, as a fraction of `1/L̂`.
pub const SIMPLEX_STEP_FRACTION: f64 = 0.1;
const SCALAR_TOL: f64 = 1e-10;

/// Closed-form greedy label for an unregularized least-squares learner:
/// `y* = (1−λ')⟨w,x⟩ + λ'⟨w*,x⟩` with `λ' = 1/(η‖x‖²)`.
pub fn synth_label_lsr(x: &[f64], w: &[f64], w_star: &[f64], eta: f64) -> Result<f64> {
    check_len("synth_label_lsr", w.len(), x.len())?;
    check_len("synth_label_lsr target", w.len(), w_star.len())?;
    let xx = sq_norm(x);
    if xx == 0.0 {
        return Err(Error::Degenerate("zero feature vector".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidArg(format!("step size must be > 0, got {eta}")));
    }
    let lam = 1.0 / (eta * xx);
    Ok((1.0 - lam) * dot_unchecked(w, x) + lam * dot_unchecked(w_star, x))
}

/// Regularized least squares: `y* = ⟨w,x⟩ − ⟨w − w* − ηλ·reg(w), x⟩ / (η‖x‖²)`.
fn lsr_unconstrained(m: &ScalarModel) -> Result<f64> {
    if m.xx == 0.0 {
        return Err(Error::Degenerate("zero feature vector".into()));
    }
    Ok(m.z - m.bx / (m.eta * m.xx))
}

/// Search bracket used for label searches that have no natural bounds:
/// `[min(ỹ,⟨w,x⟩) − 10·span, max(ỹ,⟨w,x⟩) + 10·span]`, `span = |ỹ − ⟨w,x⟩| + 1`.
pub fn default_label_bracket(y_true: f64, z: f64) -> (f64, f64) {
    let span = (y_true - z).abs() + 1.0;
    (y_true.min(z) - 10.0 * span, y_true.max(z) + 10.0 * span)
}

fn validate_constraint(c: &LabelConstraint) -> Result<()> {
    if let LabelConstraint::Magnitude { radius, .. } = c {
        if !(*radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArg(format!("magnitude radius must be finite and >= 0, got {radius}")));
        }
    }
    Ok(())
}

fn scalar_interval(c: &LabelConstraint, m: &ScalarModel, y_true: f64) -> Result<Option<(f64, f64)>> {
    Ok(match c {
        LabelConstraint::None => None,
        LabelConstraint::Magnitude { radius, anchor, .. } => {
            let a = match anchor {
                Anchor::GroundTruth => y_true,
                Anchor::Prediction => m.prediction(),
            };
            Some((a - radius, a + radius))
        }
        LabelConstraint::Simplex if m.kind == LearnerKind::Lr => Some((-1.0, 1.0)),
        LabelConstraint::OneHot | LabelConstraint::Simplex => {
            return Err(Error::Incompatible(format!("{c:?} constraint needs a classification learner")))
        }
    })
}

/// Greedy label for a logistic-regression learner by 1-D search of `G`.
///
/// Admissible sets: `None` → `[−B, B]` with `B = max(10, 10|ỹ|)`; `Simplex` →
/// `[−1, 1]` (the two-class simplex under `y = q₊ − q₋`); `OneHot` → `{+1, −1}`
/// with ties going to `+1`; `Magnitude` → the interval around the anchor
/// (`ỹ` or the expected label `2σ(⟨w,x⟩) − 1`). The search result is replaced by
/// `ỹ` whenever `ỹ` is admissible and strictly better.
pub fn synth_label_lr(
    learner: &Learner,
    x: &[f64],
    y_true: f64,
    w: &[f64],
    w_star: &[f64],
    eta: f64,
    constraint: &LabelConstraint,
) -> Result<f64> {
    if learner.kind != LearnerKind::Lr {
        return Err(Error::Incompatible("synth_label_lr needs an LR learner".into()));
    }
    validate_constraint(constraint)?;
    let m = ScalarModel::new(learner, x, w, w_star, eta)?;
    let phi = |y: f64| m.g(y);
    let y = if let LabelConstraint::OneHot = constraint {
        if phi(-1.0) < phi(1.0) {
            -1.0
        } else {
            1.0
        }
    } else {
        let (lo, hi) = match scalar_interval(constraint, &m, y_true)? {
            Some(iv) => iv,
            None => {
                let b = 10f64.max(10.0 * y_true.abs());
                (-b, b)
            }
        };
        if hi - lo <= SCALAR_TOL {
            0.5 * (lo + hi)
        } else {
            minimize_1d(phi, lo, hi, SCALAR_TOL)?
        }
    };
    Ok(prefer_truth_scalar(&m, constraint, y, y_true))
}

fn scalar_admissible(c: &LabelConstraint, m: &ScalarModel, y: f64, y_true: f64) -> bool {
    match c {
        LabelConstraint::None => true,
        LabelConstraint::OneHot => y == 1.0 || y == -1.0,
        _ => match scalar_interval(c, m, y_true) {
            Ok(Some((lo, hi))) => lo <= y && y <= hi,
            _ => false,
        },
    }
}

fn prefer_truth_scalar(m: &ScalarModel, c: &LabelConstraint, y: f64, y_true: f64) -> f64 {
    if scalar_admissible(c, m, y_true, y_true) && m.g(y_true) < m.g(y) {
        y_true
    } else {
        y
    }
}

fn lsr_label(learner: &Learner, x: &[f64], y_true: f64, w: &[f64], w_star: &[f64], eta: f64, c: &LabelConstraint) -> Result<f64> {
    validate_constraint(c)?;
    let m = ScalarModel::new(learner, x, w, w_star, eta)?;
    let y = lsr_unconstrained(&m)?;
    // G is a convex parabola in y, so clipping to the interval is exact.
    Ok(match scalar_interval(c, &m, y_true)? {
        None => y,
        Some((lo, hi)) => y.clamp(lo, hi),
    })
}

fn p_norm(v: &[f64], p: PNorm) -> f64 {
    match p {
        PNorm::L1 => v.iter().map(|x| x.abs()).sum(),
        PNorm::L2 => sq_norm(v).sqrt(),
        PNorm::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// Sum-zero minimizer of `−2η bᵀδ + η² δᵀQδ`; the label is `p − δ`.
fn vector_unconstrained(m: &VectorModel) -> Result<Vec<f64>> {
    let k = m.k();
    let kf = k as f64;
    // Π = I − 11ᵀ/K; solve (ΠQΠ + 11ᵀ/K) δ = Π b / η.
    let mut qp = m.q.clone();
    let row_mean: Vec<f64> = (0..k).map(|r| m.q[r * k..(r + 1) * k].iter().sum::<f64>() / kf).collect();
    let col_mean: Vec<f64> = (0..k).map(|c| (0..k).map(|r| m.q[r * k + c]).sum::<f64>() / kf).collect();
    let all_mean: f64 = row_mean.iter().sum::<f64>() / kf;
    for r in 0..k {
        for c in 0..k {
            qp[r * k + c] = m.q[r * k + c] - row_mean[r] - col_mean[c] + all_mean + 1.0 / kf;
        }
    }
    let bmean = m.b.iter().sum::<f64>() / kf;
    let rhs: Vec<f64> = m.b.iter().map(|bi| (bi - bmean) / m.eta).collect();
    let delta = cholesky_solve(&Matrix::new(k, k, qp)?, &rhs).map_err(|e| Error::Degenerate(format!("label quadratic: {e}")))?;
    Ok(m.p.iter().zip(&delta).map(|(p, d)| p - d).collect())
}

fn simplex_pgd(m: &VectorModel, start: &[f64]) -> Result<Vec<f64>> {
    let k = m.k();
    let lip = 2.0 * m.eta * m.eta * (0..k).map(|r| m.q[r * k..(r + 1) * k].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut y = project_simplex(start)?;
    if !(lip > 0.0) {
        return Ok(y);
    }
    let step = SIMPLEX_STEP_FRACTION / lip;
    for _ in 0..SIMPLEX_ITERS {
        // ∇_y G on the simplex (δ = p − y): 2ηb − 2η²Q(p − y)
        let d: Vec<f64> = m.p.iter().zip(&y).map(|(p, yi)| p - yi).collect();
        let next: Vec<f64> = (0..k)
            .map(|r| {
                let g = 2.0 * m.eta * m.b[r] - 2.0 * m.eta * m.eta * dot_unchecked(&m.q[r * k..(r + 1) * k], &d);
                y[r] - step * g
            })
            .collect();
        y = project_simplex(&next)?;
    }
    Ok(y)
}

/// Exhaustive search over the K one-hot labels; ties go to the lowest class.
fn onehot_argmin(m: &VectorModel) -> usize {
    let k = m.k();
    let mut best = (f64::INFINITY, 0);
    for j in 0..k {
        let g = m.g(&crate::data::onehot(j, k));
        if g < best.0 {
            best = (g, j);
        }
    }
    best.1
}

fn on_simplex(y: &[f64]) -> bool {
    (y.iter().sum::<f64>() - 1.0).abs() <= 1e-12 && y.iter().all(|v| *v >= 0.0)
}

fn vector_label(m: &VectorModel, y_true: &[f64], c: &LabelConstraint) -> Result<Vec<f64>> {
    validate_constraint(c)?;
    let k = m.k();
    check_len("vector label", k, y_true.len())?;
    Ok(match c {
        LabelConstraint::OneHot => crate::data::onehot(onehot_argmin(m), k),
        LabelConstraint::Simplex => {
            let start = if on_simplex(y_true) { y_true.to_vec() } else { m.p.clone() };
            let mut best = simplex_pgd(m, &start)?;
            // The fixed iteration budget may stop short on ill-conditioned Q;
            // never return something worse than ỹ or the best vertex.
            let mut candidates = vec![crate::data::onehot(onehot_argmin(m), k)];
            if on_simplex(y_true) {
                candidates.push(y_true.to_vec());
            }
            for c in candidates {
                if m.g(&c) < m.g(&best) {
                    best = c;
                }
            }
            best
        }
        LabelConstraint::None => vector_unconstrained(m)?,
        LabelConstraint::Magnitude { p, radius, anchor } => {
            let a = match anchor {
                Anchor::GroundTruth => y_true.to_vec(),
                Anchor::Prediction => m.p.clone(),
            };
            let yu = vector_unconstrained(m)?;
            let diff: Vec<f64> = yu.iter().zip(&a).map(|(u, ai)| u - ai).collect();
            let n = p_norm(&diff, *p);
            let y = if n <= *radius {
                yu
            } else {
                let s = radius / n;
                a.iter().zip(&diff).map(|(ai, di)| ai + s * di).collect()
            };
            let truth_in_ball = p_norm(&y_true.iter().zip(&a).map(|(t, ai)| t - ai).collect::<Vec<_>>(), *p) <= *radius;
            if truth_in_ball && m.g(y_true) <= m.g(&y) {
                y_true.to_vec()
            } else {
                y
            }
        }
    })
}

/// Greedy label for a multiclass-linear or MLP learner (β = 1, i.e. the full
/// parameter discrepancy).
pub fn synth_label_vector(
    learner: &Learner,
    x: &[f64],
    y_true: &[f64],
    w: &[f64],
    w_star: &[f64],
    eta: f64,
    constraint: &LabelConstraint,
) -> Result<Vec<f64>> {
    if !learner.is_vector_label() {
        return Err(Error::Incompatible("synth_label_vector needs a multiclass or MLP learner".into()));
    }
    let m = VectorModel::new(learner, x, w, w_star, eta, 1.0)?;
    vector_label(&m, y_true, constraint)
}

/// MLP heuristic: minimizes `‖W′−W*‖² + β‖V′−V*‖²` over admissible labels,
/// where `(V′, W′)` is the one-step SGD update.
#[allow(clippy::too_many_arguments)]
pub fn synth_label_mlp(
    learner: &Learner,
    x: &[f64],
    y_true: &[f64],
    w: &[f64],
    w_star: &[f64],
    eta: f64,
    beta: f64,
    constraint: &LabelConstraint,
) -> Result<Vec<f64>> {
    if learner.mlp_shape().is_none() {
        return Err(Error::Incompatible("synth_label_mlp needs an MLP learner".into()));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArg(format!("beta must be >= 0, got {beta}")));
    }
    let m = VectorModel::new(learner, x, w, w_star, eta, beta)?;
    vector_label(&m, y_true, constraint)
}

/// `‖W′−W*‖² + β‖V′−V*‖²` for a given label (β = 1 gives the plain discrepancy).
pub fn mlp_objective(learner: &Learner, x: &[f64], y: &[f64], w: &[f64], w_star: &[f64], eta: f64, beta: f64) -> Result<f64> {
    let m = VectorModel::new(learner, x, w, w_star, eta, beta)?;
    check_len("mlp_objective label", m.k(), y.len())?;
    Ok(m.g(y))
}

/// Greedy label for any learner kind under `constraint`.
pub fn synth_label(
    learner: &Learner,
    x: &[f64],
    y_true: &[f64],
    w: &[f64],
    w_star: &[f64],
    eta: f64,
    constraint: &LabelConstraint,
) -> Result<Vec<f64>> {
    check_len("synth_label ground truth", learner.label_len(), y_true.len())?;
    match learner.kind {
        LearnerKind::Lsr => lsr_label(learner, x, y_true[0], w, w_star, eta, constraint).map(|y| vec![y]),
        LearnerKind::Lr => synth_label_lr(learner, x, y_true[0], w, w_star, eta, constraint).map(|y| vec![y]),
        _ => synth_label_vector(learner, x, y_true, w, w_star, eta, constraint),
    }
}
