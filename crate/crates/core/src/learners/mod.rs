//! Loss, gradient and SGD update for the learner families being taught.
//!
//! Every learner keeps its parameters in one flat vector:
//! - `Lsr`, `Lr`: `w ∈ ℝ^d`
//! - `Multiclass{K}`: `W ∈ ℝ^{d×K}` row-major, logits `Wᵀx`
//! - `Mlp{h,K}`: `V ∈ ℝ^{d×h}` followed by `W ∈ ℝ^{h×K}`, both row-major,
//!   logits `Wᵀσ(Vᵀx)`
//!
//! With `bias = true` the last input coordinate is the constant 1 appended by
//! [`crate::data::Pool::with_bias`]; the weights reading that coordinate are not
//! regularized.

mod linear;
mod mlp;

pub use linear::{lr_grad, lr_loss, lsr_grad, lsr_loss};
pub use mlp::{mlp_forward, mlp_loss_grad, MlpForward, MlpShape};
pub(crate) use linear::lr_coef as linear_lr_coef;
pub(crate) use mlp::{act_deriv as mlp_act_deriv, mlp_forward_unchecked as mlp_forward_parts};

use crate::error::{check_len, Error, Result};
use crate::numerics::{linalg::dot_unchecked, sigmoid, softmax};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    pub fn slope(self) -> f64 {
        match self {
            Activation::Relu => 0.0,
            Activation::LeakyRelu(s) => s,
        }
    }
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu(0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerKind {
    Lsr,
    Lr,
    Multiclass { classes: usize },
    Mlp { hidden: usize, classes: usize, activation: Activation },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Learner {
    pub kind: LearnerKind,
    /// Input dimension, including the bias column when `bias` is set.
    pub dim: usize,
    pub lambda: f64,
    pub bias: bool,
}

impl Learner {
    pub fn new(kind: LearnerKind, dim: usize, lambda: f64, bias: bool) -> Result<Self> {
        if dim == 0 || (bias && dim < 2) {
            return Err(Error::InvalidArg(format!("learner input dimension {dim} too small")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArg(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        match kind {
            LearnerKind::Multiclass { classes } | LearnerKind::Mlp { classes, .. } if classes < 2 => {
                return Err(Error::InvalidArg(format!("need at least 2 classes, got {classes}")));
            }
            LearnerKind::Mlp { hidden: 0, .. } => {
                return Err(Error::InvalidArg("MLP needs at least one hidden unit".into()));
            }
            _ => {}
        }
        Ok(Self { kind, dim, lambda, bias })
    }

    pub fn param_len(&self) -> usize {
        match self.kind {
            LearnerKind::Lsr | LearnerKind::Lr => self.dim,
            LearnerKind::Multiclass { classes } => self.dim * classes,
            LearnerKind::Mlp { hidden, classes, .. } => self.dim * hidden + hidden * classes,
        }
    }

    /// Length of a label vector (1 for scalar-label learners).
    pub fn label_len(&self) -> usize {
        self.classes().unwrap_or(1)
    }

    pub fn classes(&self) -> Option<usize> {
        match self.kind {
            LearnerKind::Lsr | LearnerKind::Lr => None,
            LearnerKind::Multiclass { classes } | LearnerKind::Mlp { classes, .. } => Some(classes),
        }
    }

    pub fn is_vector_label(&self) -> bool {
        self.classes().is_some()
    }

    pub fn mlp_shape(&self) -> Option<(MlpShape, Activation)> {
        match self.kind {
            LearnerKind::Mlp { hidden, classes, activation } => Some((
                MlpShape { d: self.dim, h: hidden, k: classes },
                activation,
            )),
            _ => None,
        }
    }

    /// 1 for regularized coordinates, 0 for weights attached to the bias input.
    pub fn reg_mask(&self) -> Vec<f64> {
        let mut m = vec![1.0; self.param_len()];
        if self.bias {
            let b = self.dim - 1;
            match self.kind {
                LearnerKind::Lsr | LearnerKind::Lr => m[b] = 0.0,
                LearnerKind::Multiclass { classes: k } => m[b * k..(b + 1) * k].iter_mut().for_each(|v| *v = 0.0),
                LearnerKind::Mlp { hidden: h, .. } => m[b * h..(b + 1) * h].iter_mut().for_each(|v| *v = 0.0),
            }
        }
        m
    }

    /// `w` with the unregularized coordinates zeroed, so the penalty gradient is `λ·reg_part(w)`.
    pub fn reg_part(&self, w: &[f64]) -> Vec<f64> {
        let mut r = w.to_vec();
        if self.bias {
            for (ri, mi) in r.iter_mut().zip(self.reg_mask()) {
                *ri *= mi;
            }
        }
        r
    }

    fn check(&self, w: &[f64], x: &[f64], y: &[f64]) -> Result<()> {
        check_len("learner params", self.param_len(), w.len())?;
        check_len("learner input", self.dim, x.len())?;
        check_len("learner label", self.label_len(), y.len())
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let r = self.reg_part(w);
        0.5 * self.lambda * dot_unchecked(&r, &r)
    }

    pub fn loss(&self, w: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(w, x, y)?;
        Ok(self.data_loss(w, x, y) + self.penalty(w))
    }

    /// Loss without the regularizer.
    pub fn data_loss(&self, w: &[f64], x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            LearnerKind::Lsr => linear::lsr_loss(x, y[0], w, 0.0),
            LearnerKind::Lr => linear::lr_loss(x, y[0], w, 0.0),
            LearnerKind::Multiclass { classes } => {
                let z = multiclass_logits(w, x, classes);
                cross_entropy(&z, y)
            }
            LearnerKind::Mlp { hidden, classes, activation } => {
                let f = mlp::mlp_forward_unchecked(x, w, MlpShape { d: self.dim, h: hidden, k: classes }, activation);
                cross_entropy(&f.logits, y)
            }
        }
    }

    pub fn grad(&self, w: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check(w, x, y)?;
        let mut g = self.data_grad(w, x, y);
        if self.lambda != 0.0 {
            let r = self.reg_part(w);
            for (gi, ri) in g.iter_mut().zip(r) {
                *gi += self.lambda * ri;
            }
        }
        Ok(g)
    }

    /// Gradient of the data term only. Vector labels need not lie on the
    /// simplex; the cross-entropy gradient uses `δ = (Σy)·p − y`.
    pub fn data_grad(&self, w: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
        match self.kind {
            LearnerKind::Lsr => {
                let r = dot_unchecked(w, x) - y[0];
                x.iter().map(|xi| r * xi).collect()
            }
            LearnerKind::Lr => {
                let c = linear::lr_coef(dot_unchecked(w, x), y[0]);
                x.iter().map(|xi| c * xi).collect()
            }
            LearnerKind::Multiclass { classes } => {
                let p = softmax(&multiclass_logits(w, x, classes));
                let delta = ce_delta(&p, y);
                outer(x, &delta)
            }
            LearnerKind::Mlp { hidden, classes, activation } => {
                mlp::mlp_grad_unchecked(x, y, w, MlpShape { d: self.dim, h: hidden, k: classes }, activation)
            }
        }
    }

    /// Prediction in label space: `⟨w,x⟩` (LSR), `2σ(⟨w,x⟩)−1` (LR, the expected
    /// ±1 label), class probabilities (vector learners).
    pub fn predict(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        match self.kind {
            LearnerKind::Lsr => vec![dot_unchecked(w, x)],
            LearnerKind::Lr => vec![2.0 * sigmoid(dot_unchecked(w, x)) - 1.0],
            LearnerKind::Multiclass { classes } => softmax(&multiclass_logits(w, x, classes)),
            LearnerKind::Mlp { hidden, classes, activation } => {
                mlp::mlp_forward_unchecked(x, w, MlpShape { d: self.dim, h: hidden, k: classes }, activation).probs
            }
        }
    }

    /// Whether the prediction agrees with a ground-truth label. For LSR this
    /// compares signs, which is only meaningful for ±1 targets.
    pub fn correct(&self, w: &[f64], x: &[f64], y: &[f64]) -> bool {
        let p = self.predict(w, x);
        if self.is_vector_label() {
            argmax(&p) == argmax(y)
        } else {
            (p[0] >= 0.0) == (y[0] >= 0.0)
        }
    }
}

pub(crate) fn multiclass_logits(w: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    let mut z = vec![0.0; k];
    for (i, xi) in x.iter().enumerate() {
        if *xi != 0.0 {
            for (zj, wij) in z.iter_mut().zip(&w[i * k..(i + 1) * k]) {
                *zj += xi * wij;
            }
        }
    }
    z
}

/// `(Σy)·p − y`, the gradient of cross-entropy with respect to the logits.
pub(crate) fn ce_delta(p: &[f64], y: &[f64]) -> Vec<f64> {
    let s: f64 = y.iter().sum();
    p.iter().zip(y).map(|(pi, yi)| s * pi - yi).collect()
}

pub(crate) fn cross_entropy(z: &[f64], y: &[f64]) -> f64 {
    let lse = crate::numerics::log_sum_exp(z);
    y.iter().zip(z).map(|(yi, zi)| yi * (lse - zi)).sum()
}

pub(crate) fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ai in a {
        out.extend(b.iter().map(|bj| ai * bj));
    }
    out
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η_t = η₀ / (1 + decay·t)`
    InverseDecay { eta0: f64, decay: f64 },
}

impl StepSchedule {
    pub fn new_constant(eta: f64) -> Result<Self> {
        let s = StepSchedule::Constant(eta);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (eta0, decay) = match *self {
            StepSchedule::Constant(e) => (e, 0.0),
            StepSchedule::InverseDecay { eta0, decay } => (eta0, decay),
        };
        if !(eta0 > 0.0 && eta0.is_finite()) || !(decay >= 0.0 && decay.is_finite()) {
            return Err(Error::InvalidArg(format!("step schedule needs eta0 > 0 and decay >= 0 ({self:?})")));
        }
        Ok(())
    }

    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(e) => e,
            StepSchedule::InverseDecay { eta0, decay } => eta0 / (1.0 + decay * t as f64),
        }
    }
}

/// `w − η·grad`.
pub fn sgd_step(w: &[f64], grad: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_len("sgd_step", w.len(), grad.len())?;
    if !(eta > 0.0) {
        return Err(Error::InvalidArg(format!("step size must be > 0, got {eta}")));
    }
    Ok(w.iter().zip(grad).map(|(wi, gi)| wi - eta * gi).collect())
}
