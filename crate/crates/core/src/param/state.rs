//! Teacher state features and the learner's SGD step expressed on the tape.

use std::ops::Range;

use crate::error::{check_len, Result};
use crate::learners::{Learner, LearnerKind};
use crate::numerics::{dot, Tape, Var};

/// Offsets of the unrolled-teacher state `[x; ỹ; w; (w*); prediction]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    pub x: Range<usize>,
    pub y: Range<usize>,
    pub w: Range<usize>,
    pub target: Option<Range<usize>>,
    pub pred: Range<usize>,
}

impl StateLayout {
    pub fn new(learner: &Learner, include_target: bool) -> Self {
        let (d, k, p) = (learner.dim, learner.label_len(), learner.param_len());
        let x = 0..d;
        let y = d..d + k;
        let w = d + k..d + k + p;
        let mut end = w.end;
        let target = include_target.then(|| {
            end += p;
            w.end..end
        });
        let pred = end..end + k;
        Self { x, y, w, target, pred }
    }

    pub fn len(&self) -> usize {
        self.pred.end
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn check_dims(learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64]) -> Result<()> {
    check_len("state input", learner.dim, x.len())?;
    check_len("state label", learner.label_len(), y_true.len())?;
    check_len("state weights", learner.param_len(), w.len())
}

/// `[x; ỹ; flat(w); flat(w*) if given; prediction(w, x)]`, laid out by [`StateLayout`].
pub fn build_state_omniscient(learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64], w_star: Option<&[f64]>) -> Result<Vec<f64>> {
    check_dims(learner, x, y_true, w)?;
    let mut s = Vec::with_capacity(StateLayout::new(learner, w_star.is_some()).len());
    s.extend_from_slice(x);
    s.extend_from_slice(y_true);
    s.extend_from_slice(w);
    if let Some(t) = w_star {
        check_len("state target", w.len(), t.len())?;
        s.extend_from_slice(t);
    }
    s.extend(learner.predict(w, x));
    Ok(s)
}

/// `[flat(w); ⟨w* − w, −η∇ℓ(x, a|w)⟩ · scale for each action a]`.
pub fn build_state_pg(learner: &Learner, w: &[f64], w_star: &[f64], x: &[f64], eta: f64, actions: &[Vec<f64>], scale: f64) -> Result<Vec<f64>> {
    check_len("pg state target", w.len(), w_star.len())?;
    let disp: Vec<f64> = w_star.iter().zip(w).map(|(a, b)| a - b).collect();
    let mut s = w.to_vec();
    for a in actions {
        let g = learner.grad(w, x, a)?;
        s.push(-eta * dot(&disp, &g)? * scale);
    }
    Ok(s)
}

/// Learner output before the link: `⟨w,x⟩` (scalar learners), logits otherwise.
/// For the MLP, also returns the pre-activation and hidden nodes.
fn tape_scores(tape: &mut Tape, learner: &Learner, w: Var, x: Var) -> Result<(Var, Option<(Var, Var)>)> {
    let d = learner.dim;
    Ok(match learner.kind {
        LearnerKind::Lsr | LearnerKind::Lr => (tape.dot(w, x)?, None),
        LearnerKind::Multiclass { classes } => (tape.matvec_t(w, x, d, classes)?, None),
        LearnerKind::Mlp { hidden, classes, activation } => {
            let v = tape.slice(w, 0, d * hidden)?;
            let ww = tape.slice(w, d * hidden, hidden * classes)?;
            let u = tape.matvec_t(v, x, d, hidden)?;
            let p = tape.leaky_relu(u, activation.slope());
            (tape.matvec_t(ww, p, hidden, classes)?, Some((u, p)))
        }
    })
}

/// `σ(a)` for a length-1 node, as `softmax([0, a])₁`.
fn tape_sigmoid(tape: &mut Tape, a: Var) -> Result<Var> {
    let zero = tape.constant(&[0.0]);
    let pair = tape.concat(&[zero, a]);
    let s = tape.softmax(pair);
    tape.slice(s, 1, 1)
}

/// Prediction in label space, matching [`Learner::predict`].
pub fn predict_tape(tape: &mut Tape, learner: &Learner, w: Var, x: Var) -> Result<Var> {
    let (z, _) = tape_scores(tape, learner, w, x)?;
    Ok(match learner.kind {
        LearnerKind::Lsr => z,
        LearnerKind::Lr => {
            let s = tape_sigmoid(tape, z)?;
            let s2 = tape.scale(s, 2.0);
            let one = tape.constant(&[1.0]);
            tape.sub(s2, one)?
        }
        _ => tape.softmax(z),
    })
}

/// Full gradient `∇ℓ(x, y | w)` (data term plus `λ·reg_part(w)`) as a tape node.
pub fn grad_tape(tape: &mut Tape, learner: &Learner, w: Var, x: Var, y: Var) -> Result<Var> {
    let (z, hidden) = tape_scores(tape, learner, w, x)?;
    let g = match learner.kind {
        LearnerKind::Lsr => {
            let r = tape.sub(z, y)?;
            tape.mul_scalar(x, r)?
        }
        LearnerKind::Lr => {
            let yz = tape.mul(y, z)?;
            let nyz = tape.scale(yz, -1.0);
            let s = tape_sigmoid(tape, nyz)?;
            let ys = tape.mul(y, s)?;
            let c = tape.scale(ys, -1.0);
            tape.mul_scalar(x, c)?
        }
        LearnerKind::Multiclass { .. } => {
            let delta = ce_delta_tape(tape, z, y)?;
            tape.outer(x, delta)
        }
        LearnerKind::Mlp { hidden: h, classes, activation } => {
            let (u, p) = hidden.expect("mlp scores carry hidden nodes");
            let delta = ce_delta_tape(tape, z, y)?;
            let dw = tape.outer(p, delta);
            let ww = tape.slice(w, learner.dim * h, h * classes)?;
            let back = tape.matvec(ww, delta, h, classes)?;
            let dact = tape.activation_deriv(u, activation.slope());
            let hid = tape.mul(back, dact)?;
            let dv = tape.outer(x, hid);
            tape.concat(&[dv, dw])
        }
    };
    if learner.lambda == 0.0 {
        return Ok(g);
    }
    let r = if learner.bias {
        let mask = tape.constant(&learner.reg_mask());
        tape.mul(w, mask)?
    } else {
        w
    };
    let r = tape.scale(r, learner.lambda);
    tape.add(g, r)
}

/// `δ = (Σy)·softmax(z) − y`.
fn ce_delta_tape(tape: &mut Tape, z: Var, y: Var) -> Result<Var> {
    let p = tape.softmax(z);
    let sy = tape.sum(y);
    let sp = tape.mul_scalar(p, sy)?;
    tape.sub(sp, y)
}

/// Data loss `ℓ(x, y | w)` without the penalty, as a tape node.
pub fn data_loss_tape(tape: &mut Tape, learner: &Learner, w: Var, x: Var, y: Var) -> Result<Var> {
    let (z, _) = tape_scores(tape, learner, w, x)?;
    Ok(match learner.kind {
        LearnerKind::Lsr => {
            let r = tape.sub(z, y)?;
            let s = tape.sq_norm(r);
            tape.scale(s, 0.5)
        }
        LearnerKind::Lr => {
            // softplus(−yz) = −log σ(yz) = CE of logits [0, yz] against target [0, 1].
            let yz = tape.mul(y, z)?;
            let zero = tape.constant(&[0.0]);
            let logits = tape.concat(&[zero, yz]);
            let t = tape.constant(&[0.0, 1.0]);
            tape.cross_entropy(logits, t)?
        }
        _ => tape.cross_entropy(z, y)?,
    })
}
