use crate::error::{check_len, Error, Result};
use crate::learners::{ce_delta, Learner, LearnerKind};
use crate::numerics::linalg::{dot_unchecked, sq_dist, sq_norm};
use crate::numerics::{sigmoid, softmax};

/// `G = ‖w − η∇ℓ − w*‖²` with its decomposition `G = ‖w−w*‖² + η²T1 − 2ηT2`,
/// where `T1 = ‖∇ℓ‖²` and `T2 = ⟨w − w*, ∇ℓ⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub g: f64,
    pub t1: f64,
    pub t2: f64,
}

pub fn discrepancy_g(learner: &Learner, x: &[f64], y: &[f64], w: &[f64], w_star: &[f64], eta: f64) -> Result<Discrepancy> {
    check_len("discrepancy_g target", w.len(), w_star.len())?;
    let grad = learner.grad(w, x, y)?;
    let t1 = sq_norm(&grad);
    let t2: f64 = w.iter().zip(w_star).zip(&grad).map(|((a, b), g)| (a - b) * g).sum();
    let g = sq_dist(w, w_star) + eta * eta * t1 - 2.0 * eta * t2;
    Ok(Discrepancy { g, t1, t2 })
}

/// `‖w − η∇ℓ(x,y|w) − w*‖²` evaluated by taking the step explicitly.
pub fn discrepancy_direct(learner: &Learner, x: &[f64], y: &[f64], w: &[f64], w_star: &[f64], eta: f64) -> Result<f64> {
    check_len("discrepancy_direct target", w.len(), w_star.len())?;
    let grad = learner.grad(w, x, y)?;
    Ok(w.iter().zip(&grad).zip(w_star).map(|((wi, gi), si)| (wi - eta * gi - si).powi(2)).sum())
}

/// `w − w* − ηλ·reg_part(w)`: the part of the post-step displacement that does
/// not depend on the label.
pub(crate) fn label_free_residual(learner: &Learner, w: &[f64], w_star: &[f64], eta: f64) -> Vec<f64> {
    let r = learner.reg_part(w);
    w.iter().zip(w_star).zip(&r).map(|((wi, si), ri)| wi - si - eta * learner.lambda * ri).collect()
}

/// Scalar-label learners: `∇ℓ = c(y)·x + λ·reg_part(w)`, so
/// `G(y) = ‖B‖² − 2η c ⟨B,x⟩ + η² c² ‖x‖²` with `B` the label-free residual.
#[derive(Debug, Clone)]
pub(crate) struct ScalarModel {
    pub kind: LearnerKind,
    pub z: f64,
    pub bb: f64,
    pub bx: f64,
    pub xx: f64,
    pub eta: f64,
}

impl ScalarModel {
    pub fn new(learner: &Learner, x: &[f64], w: &[f64], w_star: &[f64], eta: f64) -> Result<Self> {
        check_len("label model input", learner.dim, x.len())?;
        check_len("label model params", learner.param_len(), w.len())?;
        check_len("label model target", w.len(), w_star.len())?;
        let b = label_free_residual(learner, w, w_star, eta);
        Ok(Self { kind: learner.kind, z: dot_unchecked(w, x), bb: sq_norm(&b), bx: dot_unchecked(&b, x), xx: sq_norm(x), eta })
    }

    pub fn coef(&self, y: f64) -> f64 {
        match self.kind {
            LearnerKind::Lsr => self.z - y,
            _ => crate::learners::linear_lr_coef(self.z, y),
        }
    }

    pub fn g(&self, y: f64) -> f64 {
        let c = self.coef(y);
        self.bb - 2.0 * self.eta * c * self.bx + self.eta * self.eta * c * c * self.xx
    }

    /// `2σ(z) − 1` for LR, `z` for LSR.
    pub fn prediction(&self) -> f64 {
        match self.kind {
            LearnerKind::Lsr => self.z,
            _ => 2.0 * sigmoid(self.z) - 1.0,
        }
    }
}

/// Vector-label learners: the label enters only through `δ = (Σy)p − y` and
/// `G(δ) = c − 2η bᵀδ + η² δᵀQδ` (optionally with the hidden layer weighted by β).
#[derive(Debug, Clone)]
pub(crate) struct VectorModel {
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    /// `K×K` row-major.
    pub q: Vec<f64>,
    pub c: f64,
    pub eta: f64,
}

impl VectorModel {
    pub fn new(learner: &Learner, x: &[f64], w: &[f64], w_star: &[f64], eta: f64, beta: f64) -> Result<Self> {
        check_len("label model input", learner.dim, x.len())?;
        check_len("label model params", learner.param_len(), w.len())?;
        check_len("label model target", w.len(), w_star.len())?;
        let a = label_free_residual(learner, w, w_star, eta);
        match learner.kind {
            LearnerKind::Multiclass { classes: k } => {
                let logits = crate::learners::multiclass_logits(w, x, k);
                let mut b = vec![0.0; k];
                for (i, xi) in x.iter().enumerate() {
                    for (bj, aij) in b.iter_mut().zip(&a[i * k..(i + 1) * k]) {
                        *bj += aij * xi;
                    }
                }
                let xx = sq_norm(x);
                let mut q = vec![0.0; k * k];
                for j in 0..k {
                    q[j * k + j] = xx;
                }
                Ok(Self { p: softmax(&logits), b, q, c: sq_norm(&a), eta })
            }
            LearnerKind::Mlp { .. } => {
                let (shape, act) = learner.mlp_shape().expect("mlp");
                let (d, h, k) = (shape.d, shape.h, shape.k);
                let f = crate::learners::mlp_forward_parts(x, w, shape, act);
                let (av, aw) = a.split_at(shape.v_len());
                let wmat = &w[shape.v_len()..];
                let dd: Vec<f64> = f.u.iter().map(|u| crate::learners::mlp_act_deriv(*u, act)).collect();
                // b = A_Wᵀ P + β Wᵀ D A_Vᵀ x
                let mut b = vec![0.0; k];
                for j in 0..h {
                    for (bk, awjk) in b.iter_mut().zip(&aw[j * k..(j + 1) * k]) {
                        *bk += awjk * f.p[j];
                    }
                }
                let mut avx = vec![0.0; h];
                for i in 0..d {
                    for (o, avij) in avx.iter_mut().zip(&av[i * h..(i + 1) * h]) {
                        *o += avij * x[i];
                    }
                }
                for j in 0..h {
                    let s = beta * dd[j] * avx[j];
                    for (bk, wjk) in b.iter_mut().zip(&wmat[j * k..(j + 1) * k]) {
                        *bk += s * wjk;
                    }
                }
                // Q = ‖P‖² I + β‖x‖² Wᵀ D² W
                let pp = sq_norm(&f.p);
                let xx = sq_norm(x);
                let mut q = vec![0.0; k * k];
                for j in 0..h {
                    let s = beta * xx * dd[j] * dd[j];
                    let row = &wmat[j * k..(j + 1) * k];
                    for r in 0..k {
                        for c in 0..k {
                            q[r * k + c] += s * row[r] * row[c];
                        }
                    }
                }
                for r in 0..k {
                    q[r * k + r] += pp;
                }
                Ok(Self { p: f.probs, b, q, c: sq_norm(aw) + beta * sq_norm(av), eta })
            }
            _ => Err(Error::Incompatible("vector label model needs a multiclass or MLP learner".into())),
        }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn delta(&self, y: &[f64]) -> Vec<f64> {
        ce_delta(&self.p, y)
    }

    pub fn g_delta(&self, delta: &[f64]) -> f64 {
        let k = self.k();
        let mut quad = 0.0;
        for r in 0..k {
            quad += delta[r] * dot_unchecked(&self.q[r * k..(r + 1) * k], delta);
        }
        self.c - 2.0 * self.eta * dot_unchecked(&self.b, delta) + self.eta * self.eta * quad
    }

    pub fn g(&self, y: &[f64]) -> f64 {
        self.g_delta(&self.delta(y))
    }
}
