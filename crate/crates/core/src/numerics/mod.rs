//! Dense kernels, seeded randomness, the differentiation tape and small optimizers.

pub mod linalg;
pub mod optim;
pub mod rng;
pub mod tape;

pub use linalg::{dot, frobenius, matvec, norm2, sq_dist, sq_norm, Matrix};
pub use optim::{finite_diff_grad, minimize_1d, project_simplex};
pub use rng::SeededRng;
pub use tape::{Gradients, Tape, Var};

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Relative error `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let num = sq_dist(a, b).sqrt();
    num / norm2(a).max(norm2(b)).max(floor)
}
