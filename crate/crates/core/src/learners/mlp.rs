use super::{ce_delta, cross_entropy, outer, Activation};
use crate::error::{check_len, Error, Result};
use crate::numerics::softmax;

/// Layer sizes of the two-layer perceptron: input `d`, hidden `h`, classes `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub d: usize,
    pub h: usize,
    pub k: usize,
}

impl MlpShape {
    pub fn v_len(&self) -> usize {
        self.d * self.h
    }

    pub fn w_len(&self) -> usize {
        self.h * self.k
    }
}

/// Intermediates of one forward pass: `U = Vᵀx`, `P = σ(U)`, `logits = WᵀP`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpForward {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

fn act(u: f64, a: Activation) -> f64 {
    if u > 0.0 {
        u
    } else {
        a.slope() * u
    }
}

pub(crate) fn act_deriv(u: f64, a: Activation) -> f64 {
    if u > 0.0 {
        1.0
    } else {
        a.slope()
    }
}

fn mat_t_vec(m: &[f64], v: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for i in 0..rows {
        let vi = v[i];
        if vi != 0.0 {
            for (o, mij) in out.iter_mut().zip(&m[i * cols..(i + 1) * cols]) {
                *o += mij * vi;
            }
        }
    }
    out
}

pub fn mlp_forward(x: &[f64], v: &[f64], w: &[f64], shape: MlpShape, a: Activation) -> Result<MlpForward> {
    check_len("mlp_forward input", shape.d, x.len())?;
    check_len("mlp_forward V", shape.v_len(), v.len())?;
    check_len("mlp_forward W", shape.w_len(), w.len())?;
    Ok(forward_split(x, v, w, shape, a))
}

fn forward_split(x: &[f64], v: &[f64], w: &[f64], shape: MlpShape, a: Activation) -> MlpForward {
    let u = mat_t_vec(v, x, shape.d, shape.h);
    let p: Vec<f64> = u.iter().map(|ui| act(*ui, a)).collect();
    let logits = mat_t_vec(w, &p, shape.h, shape.k);
    let probs = softmax(&logits);
    MlpForward { u, p, logits, probs }
}

pub(crate) fn mlp_forward_unchecked(x: &[f64], params: &[f64], shape: MlpShape, a: Activation) -> MlpForward {
    let (v, w) = params.split_at(shape.v_len());
    forward_split(x, v, w, shape, a)
}

/// Cross-entropy loss and exact gradients `(loss, ∂V, ∂W)` for a simplex label.
pub fn mlp_loss_grad(
    x: &[f64],
    y: &[f64],
    v: &[f64],
    w: &[f64],
    shape: MlpShape,
    a: Activation,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_len("mlp_loss_grad label", shape.k, y.len())?;
    let s: f64 = y.iter().sum();
    if (s - 1.0).abs() > 1e-8 || y.iter().any(|yi| *yi < -1e-8) {
        return Err(Error::InvalidArg(format!("MLP label must lie on the simplex (sum {s})")));
    }
    let f = mlp_forward(x, v, w, shape, a)?;
    let loss = cross_entropy(&f.logits, y);
    let (dv, dw) = backward(x, y, w, &f, shape, a);
    Ok((loss, dv, dw))
}

fn backward(x: &[f64], y: &[f64], w: &[f64], f: &MlpForward, shape: MlpShape, a: Activation) -> (Vec<f64>, Vec<f64>) {
    let delta = ce_delta(&f.probs, y);
    let dw = outer(&f.p, &delta);
    // (Wδ) ⊙ σ'(U)
    let hidden: Vec<f64> = (0..shape.h)
        .map(|j| {
            let wd: f64 = w[j * shape.k..(j + 1) * shape.k].iter().zip(&delta).map(|(a, b)| a * b).sum();
            wd * act_deriv(f.u[j], a)
        })
        .collect();
    let dv = outer(x, &hidden);
    (dv, dw)
}

pub(crate) fn mlp_grad_unchecked(x: &[f64], y: &[f64], params: &[f64], shape: MlpShape, a: Activation) -> Vec<f64> {
    let (v, w) = params.split_at(shape.v_len());
    let f = forward_split(x, v, w, shape, a);
    let (mut dv, dw) = backward(x, y, w, &f, shape, a);
    dv.extend(dw);
    dv
}
