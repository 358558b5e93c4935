//! The teaching loop: draw, synthesize, update, record.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greedy::{armijo_teacher, imt_select, lsr_label_for_gain, mixed_teach_step, newton_last_teacher, synth_label, LabelConstraint};
use crate::numerics::{norm2, sq_dist, SeededRng};
use crate::param::pool_loss_acc;

use super::config::{ExperimentConfig, TeacherKind};
use super::setup::{init_weights, Experiment};
use super::wstar::pool_objective;

/// One recorded iteration. `t = 0` is the initial state and has no example.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    /// Regularized mean loss over the teaching pool.
    pub objective: f64,
    /// `‖w − w*‖₂`.
    pub dist: f64,
    /// Accuracy on the test pool (teaching pool without one); NaN for regression.
    pub acc: f64,
    /// Teacher time of this iteration in microseconds.
    pub micros: f64,
    /// Learner update time in microseconds.
    pub learner_micros: f64,
    /// First example of the iteration's batch.
    pub example_id: Option<usize>,
    /// Label given for that example.
    pub label: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub seed: u64,
    pub label_len: usize,
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn column(&self, f: impl Fn(&TraceRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn dist(&self) -> Vec<f64> {
        self.column(|r| r.dist)
    }

    pub fn ts(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("traces hold the initial record")
    }
}

struct StepOut {
    w: Vec<f64>,
    example_id: Option<usize>,
    label: Vec<f64>,
    teacher: f64,
    learner: f64,
}

fn micros(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    exp: &'a Experiment,
    constraint: LabelConstraint,
}

impl Runner<'_> {
    fn step(&self, w: &[f64], eta: f64, draws: &mut SeededRng, sub: &mut SeededRng) -> Result<StepOut> {
        let Experiment { pool, learner, w_star, .. } = self.exp;
        if self.cfg.teacher.kind == TeacherKind::SuperEt {
            let t0 = Instant::now();
            let w_new = newton_last_teacher(learner, pool, w, w_star, self.cfg.teacher.alpha)?;
            return Ok(StepOut { w: w_new, example_id: None, label: Vec::new(), teacher: micros(t0), learner: 0.0 });
        }
        let mut gsum = vec![0.0; w.len()];
        let (mut t_teacher, mut t_learner) = (0.0, 0.0);
        let mut first: Option<(usize, Vec<f64>)> = None;
        let spec = &self.cfg.teacher;
        for _ in 0..self.cfg.run.batch {
            let t0 = Instant::now();
            let subsample = spec.imt_subsample.map(|m| (m, &mut *sub));
            // `scaled` is the gain applied to the ground-truth gradient by the theory teachers.
            let (i, y, scaled) = match spec.kind {
                TeacherKind::Sgd => {
                    let i = draws.below(pool.len());
                    (i, pool.get(i).y.clone(), None)
                }
                TeacherKind::Last | TeacherKind::LastNc => {
                    let i = draws.below(pool.len());
                    let e = pool.get(i);
                    (i, synth_label(learner, &e.x, &e.y, w, w_star, eta, &self.constraint)?, None)
                }
                TeacherKind::Imt => {
                    let (i, _) = imt_select(learner, pool, w, w_star, eta, subsample)?;
                    (i, pool.get(i).y.clone(), None)
                }
                TeacherKind::Mixed => {
                    let (i, y) = mixed_teach_step(learner, pool, w, w_star, eta, &self.constraint, subsample)?;
                    (i, y, None)
                }
                TeacherKind::Et => {
                    let i = draws.below(pool.len());
                    let e = pool.get(i);
                    let g = spec.c1 * norm2(&crate::numerics::linalg::sub(w, w_star));
                    (i, vec![lsr_label_for_gain(&e.x, e.y[0], w, g)], Some(g))
                }
                TeacherKind::Armijo => {
                    let i = draws.below(pool.len());
                    let e = pool.get(i);
                    match armijo_teacher(learner, &e.x, &e.y, w, eta, &spec.armijo) {
                        Ok(s) => (i, vec![lsr_label_for_gain(&e.x, e.y[0], w, s.g)], Some(s.g)),
                        Err(Error::Degenerate(_)) => (i, e.y.clone(), Some(0.0)),
                        Err(e) => return Err(e),
                    }
                }
                k => return Err(Error::Incompatible(format!("teacher {k} is trained, not run step by step"))),
            };
            t_teacher += micros(t0);
            let t1 = Instant::now();
            let e = pool.get(i);
            let g = match scaled {
                None => learner.grad(w, &e.x, &y)?,
                Some(gain) => learner.grad(w, &e.x, &e.y)?.into_iter().map(|v| gain * v).collect(),
            };
            gsum.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            t_learner += micros(t1);
            first.get_or_insert((e.id, y));
        }
        let t1 = Instant::now();
        let b = self.cfg.run.batch as f64;
        let w_new: Vec<f64> = w.iter().zip(&gsum).map(|(wi, gi)| wi - eta * (gi / b)).collect();
        t_learner += micros(t1);
        let (id, label) = first.expect("batch >= 1");
        Ok(StepOut { w: w_new, example_id: Some(id), label, teacher: t_teacher, learner: t_learner })
    }

    fn record(&self, t: usize, w: &[f64], out: Option<&StepOut>) -> Result<TraceRecord> {
        let exp = self.exp;
        let acc = if exp.learner.is_vector_label() || exp.learner.kind == crate::learners::LearnerKind::Lr {
            pool_loss_acc(&exp.learner, w, exp.test.as_ref().unwrap_or(&exp.pool)).1
        } else {
            f64::NAN
        };
        let timing = self.cfg.run.timing;
        Ok(TraceRecord {
            t,
            objective: pool_objective(&exp.learner, &exp.pool, w)?,
            dist: sq_dist(w, &exp.w_star).sqrt(),
            acc,
            micros: out.filter(|_| timing).map_or(0.0, |o| o.teacher),
            learner_micros: out.filter(|_| timing).map_or(0.0, |o| o.learner),
            example_id: out.and_then(|o| o.example_id),
            label: out.map(|o| o.label.clone()).unwrap_or_default(),
        })
    }

    fn run_seed(&self, seed: u64) -> Result<ConvergenceTrace> {
        let root = SeededRng::new(seed);
        let mut w = init_weights(self.cfg, self.exp, &mut root.child(0));
        let mut draws = root.child(1);
        let mut sub = root.child(2);
        let run = &self.cfg.run;
        let mut records = vec![self.record(0, &w, None)?];
        for t in 1..=run.iterations {
            let eta = self.cfg.learner.schedule.eta(t - 1);
            let out = self.step(&w, eta, &mut draws, &mut sub)?;
            if out.w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("learner diverged at iteration {t} (seed {seed})")));
            }
            w.clone_from(&out.w);
            let stop = sq_dist(&w, &self.exp.w_star).sqrt() < run.epsilon;
            if stop || t % run.record_every == 0 || t == run.iterations {
                records.push(self.record(t, &w, Some(&out))?);
            }
            if stop {
                break;
            }
        }
        Ok(ConvergenceTrace { seed, label_len: self.exp.learner.label_len(), records })
    }
}

/// Runs the configured teacher once per seed. Seed `s` draws its initial
/// weights from stream 0 and its examples from stream 1 of `SeededRng::new(s)`,
/// so different teachers with the same seed see the same initialization and,
/// when they sample uniformly, the same example sequence.
pub fn run_teaching(cfg: &ExperimentConfig, exp: &Experiment) -> Result<Vec<ConvergenceTrace>> {
    if cfg.teacher.kind.is_parameterized() {
        return Err(Error::Incompatible(format!("teacher {} must be trained with train-teacher", cfg.teacher.kind)));
    }
    let constraint = match cfg.teacher.kind {
        TeacherKind::LastNc => LabelConstraint::None,
        _ => cfg.teacher.constraint.clone(),
    };
    let runner = Runner { cfg, exp, constraint };
    cfg.run.seeds.par_iter().map(|&s| runner.run_seed(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Config;
    use crate::harness::setup::prepare;
    use crate::learners::sgd_step;

    fn setup(over: &[&str]) -> (ExperimentConfig, Experiment) {
        let mut c = Config::default();
        c.apply_overrides(&["run.seeds=0..3", "run.iterations=50", "run.timing=false", "dataset.n=100"]).unwrap();
        c.apply_overrides(over).unwrap();
        let cfg = ExperimentConfig::from_config(&c).unwrap();
        let exp = prepare(&cfg).unwrap();
        (cfg, exp)
    }

    #[test]
    fn sgd_teacher_is_plain_sgd() {
        let (cfg, exp) = setup(&["teacher.kind=sgd"]);
        let tr = run_teaching(&cfg, &exp).unwrap();
        for (trace, &seed) in tr.iter().zip(&cfg.run.seeds) {
            let root = SeededRng::new(seed);
            let mut w = root.child(0).normal_vec(4, 1.0);
            let mut draws = root.child(1);
            for r in &trace.records[1..] {
                let e = exp.pool.get(draws.below(exp.pool.len()));
                w = sgd_step(&w, &exp.learner.grad(&w, &e.x, &e.y).unwrap(), 0.001).unwrap();
                assert_eq!(r.example_id, Some(e.id));
                assert_eq!(r.dist, sq_dist(&w, &exp.w_star).sqrt());
            }
        }
    }

    #[test]
    fn infinite_epsilon_stops_after_one_step() {
        let (cfg, exp) = setup(&["run.epsilon=inf"]);
        let tr = run_teaching(&cfg, &exp).unwrap();
        assert!(tr.iter().all(|t| t.ts() == vec![0, 1]));
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let (cfg, exp) = setup(&["teacher.kind=mixed", "run.batch=3"]);
        assert_eq!(format!("{:?}", run_teaching(&cfg, &exp).unwrap()), format!("{:?}", run_teaching(&cfg, &exp).unwrap()));
    }

    #[test]
    fn every_greedy_teacher_runs() {
        for k in ["imt", "last", "mixed", "et", "armijo", "super_et"] {
            let (cfg, exp) = setup(&[&format!("teacher.kind={k}"), "run.record_every=7"]);
            let tr = run_teaching(&cfg, &exp).unwrap();
            assert_eq!(tr[0].ts(), [0, 7, 14, 21, 28, 35, 42, 49, 50]);
            assert!(tr[0].last().dist.is_finite());
        }
        let (cfg, exp) = setup(&["teacher.kind=unrolled"]);
        assert!(run_teaching(&cfg, &exp).is_err());
    }

    #[test]
    fn super_et_lands_on_target() {
        let (cfg, exp) = setup(&["teacher.kind=super_et", "run.iterations=1"]);
        let tr = run_teaching(&cfg, &exp).unwrap();
        assert!(tr.iter().all(|t| t.last().dist < 1e-9));
    }
}
