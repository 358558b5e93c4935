//! Fixed evaluation protocol: frozen student initialization, shared draws.

use rayon::prelude::*;

use super::net::TeacherNet;
use super::pg::LabelSource;
use super::state::{build_state_omniscient, build_state_pg};
use super::ActionSpace;
use crate::data::Pool;
use crate::error::{Error, Result};
use crate::learners::{argmax, Learner};
use crate::numerics::{sq_dist, SeededRng};

/// Deterministic labeling rule used at evaluation time.
pub trait TeachingPolicy: Sync {
    fn label(&self, learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64]) -> Result<Vec<f64>>;
}

/// Ground-truth labels: plain SGD.
#[derive(Debug, Clone, Copy, Default)]
pub struct SgdPolicy;

impl TeachingPolicy for SgdPolicy {
    fn label(&self, _: &Learner, _: &[f64], y_true: &[f64], _: &[f64]) -> Result<Vec<f64>> {
        Ok(y_true.to_vec())
    }
}

/// Label-output network on the state `[x; ỹ; w; (w*); prediction]`.
#[derive(Debug, Clone)]
pub struct LabelNetPolicy {
    pub net: TeacherNet,
    pub w_star: Option<Vec<f64>>,
}

impl TeachingPolicy for LabelNetPolicy {
    fn label(&self, learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let s = build_state_omniscient(learner, x, y_true, w, self.w_star.as_deref())?;
        self.net.label(&s, y_true)
    }
}

/// Greedy (argmax) action of a policy-gradient teacher over label vectors.
#[derive(Debug, Clone)]
pub struct ActionPolicy {
    pub net: TeacherNet,
    pub actions: ActionSpace,
    pub w_star: Vec<f64>,
    pub eta: f64,
    pub state_scale: f64,
}

impl ActionPolicy {
    pub fn choose(&self, learner: &Learner, x: &[f64], w: &[f64]) -> Result<usize> {
        let s = build_state_pg(learner, w, &self.w_star, x, self.eta, self.actions.actions(), self.state_scale)?;
        Ok(argmax(&self.net.forward(&s)?))
    }
}

impl TeachingPolicy for ActionPolicy {
    fn label(&self, learner: &Learner, x: &[f64], _: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.actions.get(self.choose(learner, x, w)?).to_vec())
    }
}

/// Greedy `μ` choice of a black-box policy-gradient teacher: `y = μỹ + (1−μ)p`.
#[derive(Debug, Clone)]
pub struct MuPolicy {
    pub net: TeacherNet,
    pub mus: ActionSpace,
    pub source: LabelSource,
}

impl TeachingPolicy for MuPolicy {
    fn label(&self, learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let s = build_state_omniscient(learner, x, y_true, w, None)?;
        let mu = self.mus.get(argmax(&self.net.forward(&s)?))[0];
        Ok(self.source.mix(learner, x, y_true, w, mu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub steps: usize,
    pub batch: usize,
    pub n_students: usize,
    pub init_sd: f64,
    pub seed: u64,
    pub record_every: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { steps: 300, batch: 1, n_students: 10, init_sd: 5e-2, seed: 12345, record_every: 1 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch == 0 || self.n_students == 0 || self.record_every == 0 || !(self.init_sd >= 0.0) {
            return Err(Error::InvalidArg("evaluation needs positive steps, batch, students, record interval".into()));
        }
        Ok(())
    }
}

/// Student-averaged curves at the recorded iterations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalTrace {
    pub t: Vec<usize>,
    /// Mean `‖w − w*‖` (empty without a target).
    pub dist: Vec<f64>,
    /// Mean data loss on the validation pool (empty without one).
    pub val_loss: Vec<f64>,
    /// Mean accuracy on the validation pool (empty without one).
    pub val_acc: Vec<f64>,
}

impl EvalTrace {
    pub fn final_dist(&self) -> Option<f64> {
        self.dist.last().copied()
    }

    pub fn final_val_loss(&self) -> Option<f64> {
        self.val_loss.last().copied()
    }
}

pub(crate) fn pool_loss_acc(learner: &Learner, w: &[f64], pool: &Pool) -> (f64, f64) {
    let n = pool.len() as f64;
    let (mut loss, mut acc) = (0.0, 0.0);
    for e in pool.examples() {
        loss += learner.data_loss(w, &e.x, &e.y);
        if learner.correct(w, &e.x, &e.y) {
            acc += 1.0;
        }
    }
    (loss / n, acc / n)
}

/// One learner step on a batch labeled by `policy`: `w − η·(Σ∇ℓ)/B`.
pub(crate) fn batch_step(learner: &Learner, policy: &dyn TeachingPolicy, pool: &Pool, w: &[f64], eta: f64, batch: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    let mut gsum = vec![0.0; w.len()];
    for _ in 0..batch {
        let e = pool.get(rng.below(pool.len()));
        let y = policy.label(learner, &e.x, &e.y, w)?;
        let g = learner.grad(w, &e.x, &y)?;
        gsum.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    let b = batch as f64;
    Ok(w.iter().zip(&gsum).map(|(wi, gi)| wi - eta * (gi / b)).collect())
}

/// Runs `cfg.steps` learner updates per student from a frozen initialization
/// `center + N(0, init_sd²)`. Draw sequences depend only on `cfg.seed`, so any
/// two policies see identical examples.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    policy: &dyn TeachingPolicy,
    learner: &Learner,
    pool: &Pool,
    center: &[f64],
    w_star: Option<&[f64]>,
    val: Option<&Pool>,
    eta: f64,
    cfg: &EvalConfig,
) -> Result<EvalTrace> {
    cfg.validate()?;
    if pool.is_empty() || val.is_some_and(|v| v.is_empty()) {
        return Err(Error::Empty("evaluation pool"));
    }
    crate::error::check_len("evaluation center", learner.param_len(), center.len())?;
    let root = SeededRng::new(cfg.seed);
    let mut t: Vec<usize> = (0..=cfg.steps).step_by(cfg.record_every).collect();
    if *t.last().unwrap() != cfg.steps {
        t.push(cfg.steps);
    }
    let per_student: Vec<Result<Vec<(f64, f64, f64)>>> = (0..cfg.n_students)
        .into_par_iter()
        .map(|s| {
            let mut init = root.child(super::stream_id(1, 0, s));
            let mut draws = root.child(super::stream_id(2, 0, s));
            let mut w: Vec<f64> = center.iter().zip(init.normal_vec(center.len(), cfg.init_sd)).map(|(c, n)| c + n).collect();
            let record = |w: &[f64]| {
                let d = w_star.map_or(f64::NAN, |ws| sq_dist(w, ws).sqrt());
                let (l, a) = val.map_or((f64::NAN, f64::NAN), |v| pool_loss_acc(learner, w, v));
                (d, l, a)
            };
            let mut rec = vec![record(&w)];
            let mut next = 1;
            for step in 1..=cfg.steps {
                w = batch_step(learner, policy, pool, &w, eta, cfg.batch, &mut draws)?;
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("student {s} diverged at evaluation step {step}")));
                }
                if next < t.len() && t[next] == step {
                    rec.push(record(&w));
                    next += 1;
                }
            }
            Ok(rec)
        })
        .collect();
    let per_student = per_student.into_iter().collect::<Result<Vec<_>>>()?;
    let n = cfg.n_students as f64;
    let mean = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> { (0..t.len()).map(|i| per_student.iter().map(|r| f(&r[i])).sum::<f64>() / n).collect() };
    Ok(EvalTrace {
        dist: if w_star.is_some() { mean(|r| r.0) } else { Vec::new() },
        val_loss: if val.is_some() { mean(|r| r.1) } else { Vec::new() },
        val_acc: if val.is_some() { mean(|r| r.2) } else { Vec::new() },
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_gaussian_clusters;
    use crate::learners::{sgd_step, LearnerKind};

    #[test]
    fn sgd_policy_matches_hand_rolled_sgd() {
        let pool = gen_gaussian_clusters(20, 3, 1.0, 1).unwrap().binary_as_classes().unwrap();
        let l = Learner::new(LearnerKind::Multiclass { classes: 2 }, 3, 0.0, false).unwrap();
        let center = vec![0.1; 6];
        let cfg = EvalConfig { steps: 30, n_students: 2, ..Default::default() };
        let ws = vec![0.0; 6];
        let tr = evaluate(&SgdPolicy, &l, &pool, &center, Some(&ws), None, 0.1, &cfg).unwrap();
        let root = SeededRng::new(cfg.seed);
        let mut total = 0.0;
        for s in 0..2 {
            let mut init = root.child(crate::param::stream_id(1, 0, s));
            let mut draws = root.child(crate::param::stream_id(2, 0, s));
            let mut w: Vec<f64> = center.iter().zip(init.normal_vec(6, cfg.init_sd)).map(|(c, n)| c + n).collect();
            for _ in 0..30 {
                let e = pool.get(draws.below(pool.len()));
                w = sgd_step(&w, &l.grad(&w, &e.x, &e.y).unwrap(), 0.1).unwrap();
            }
            total += sq_dist(&w, &ws).sqrt();
        }
        assert_eq!(tr.final_dist().unwrap(), total / 2.0);
        assert_eq!(tr.t.len(), 31);
    }
}
