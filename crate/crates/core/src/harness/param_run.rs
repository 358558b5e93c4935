//! Training and evaluation of the learnable teachers from a configuration.

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::param::{
    build_state_omniscient, build_state_pg, blast_pg, blast_unrolled, evaluate, train_pg_omniscient, train_unrolled_omniscient, ActionPolicy, AdamConfig, BlastPgSpec, EpisodeConfig, EvalConfig, EvalTrace,
    Head, LabelNetPolicy, MuPolicy, SgdPolicy, StateLayout, TeacherNet, TeachingPolicy, TrainConfig, TrainLog,
};

use super::config::{ExperimentConfig, TeacherKind};
use super::setup::Experiment;

pub fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    let p = &cfg.param;
    TrainConfig {
        episode: EpisodeConfig {
            horizon: p.horizon,
            gamma: p.gamma,
            baseline: p.baseline,
            n_students: p.n_students,
            reset_rate: p.reset_rate,
            unroll: p.unroll,
            decay: p.decay,
            ..EpisodeConfig::default()
        },
        episodes: p.episodes,
        eta: cfg.learner.schedule.eta(0),
        batch: cfg.run.batch,
        init_sd: p.student_sd,
        adam: AdamConfig { lr: p.lr, weight_decay: p.weight_decay, ..AdamConfig::default() },
        seed: cfg.run.seeds[0],
        eval_every: cfg.run.eval_every,
        eval: eval_config(cfg),
    }
}

pub fn eval_config(cfg: &ExperimentConfig) -> EvalConfig {
    EvalConfig {
        steps: cfg.run.eval_steps,
        batch: cfg.run.eval_batch,
        n_students: cfg.run.eval_students,
        init_sd: cfg.param.student_sd,
        seed: cfg.run.eval_seed,
        record_every: cfg.run.record_every,
    }
}

/// Student center: `w*` for omniscient teachers; configurable for black-box ones.
pub fn student_center(cfg: &ExperimentConfig, exp: &Experiment) -> Vec<f64> {
    let blast = matches!(cfg.teacher.kind, TeacherKind::BlastUnrolled | TeacherKind::BlastPg);
    if blast && !cfg.param.center_at_target {
        vec![0.0; exp.learner.param_len()]
    } else {
        exp.w_star.clone()
    }
}

/// Freshly initialized network with the input and output sizes the teacher kind needs.
pub fn new_teacher_net(cfg: &ExperimentConfig, exp: &Experiment) -> Result<TeacherNet> {
    let l = &exp.learner;
    let p = &cfg.param;
    let (input, output, head) = match cfg.teacher.kind {
        TeacherKind::Unrolled => {
            let head = if l.is_vector_label() { Head::Softmax } else { Head::Raw };
            (StateLayout::new(l, p.include_target).len(), l.label_len(), head)
        }
        TeacherKind::Pg => (l.param_len() + p.actions.len(), p.actions.len(), Head::Logits),
        TeacherKind::BlastUnrolled => (StateLayout::new(l, false).len(), l.label_len(), Head::Residual { alpha: p.residual_alpha }),
        TeacherKind::BlastPg => (StateLayout::new(l, false).len(), p.mus.len(), Head::Logits),
        k => return Err(Error::Incompatible(format!("teacher {k} has no learnable policy"))),
    };
    let mut sizes = vec![input];
    sizes.extend(&p.hidden);
    sizes.push(output);
    let mut net = TeacherNet::new(&sizes, p.activation, head, &mut SeededRng::new(cfg.run.seeds[0]).child(0x7e))?;
    if p.standardize {
        net.fit_standardization(&sample_states(cfg, exp, &mut SeededRng::new(cfg.run.seeds[0]).child(0x57))?)?;
    }
    Ok(net)
}

/// States seen from freshly initialized students on uniform draws.
const STANDARDIZE_SAMPLES: usize = 2000;

fn sample_states(cfg: &ExperimentConfig, exp: &Experiment, rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    let l = &exp.learner;
    let p = &cfg.param;
    let center = student_center(cfg, exp);
    (0..STANDARDIZE_SAMPLES)
        .map(|_| {
            let w: Vec<f64> = center.iter().zip(rng.normal_vec(center.len(), p.student_sd)).map(|(c, n)| c + n).collect();
            let e = exp.pool.get(rng.below(exp.pool.len()));
            match cfg.teacher.kind {
                TeacherKind::Pg => build_state_pg(l, &w, &exp.w_star, &e.x, cfg.learner.schedule.eta(0), p.actions.actions(), p.state_scale),
                TeacherKind::Unrolled if p.include_target => build_state_omniscient(l, &e.x, &e.y, &w, Some(&exp.w_star)),
                _ => build_state_omniscient(l, &e.x, &e.y, &w, None),
            }
        })
        .collect()
}

fn holdout(exp: &Experiment) -> Result<&crate::data::Pool> {
    exp.val.as_ref().ok_or(Error::Incompatible("black-box teachers need a validation split".into()))
}

/// Trains the configured learnable teacher in place.
pub fn train_teacher(cfg: &ExperimentConfig, exp: &Experiment, net: &mut TeacherNet) -> Result<TrainLog> {
    let tc = train_config(cfg);
    let p = &cfg.param;
    let l = &exp.learner;
    match cfg.teacher.kind {
        TeacherKind::Unrolled => train_unrolled_omniscient(net, l, &exp.pool, &exp.w_star, p.include_target, &tc),
        TeacherKind::Pg => train_pg_omniscient(net, l, &exp.pool, &exp.w_star, &p.actions, p.state_scale, &tc),
        TeacherKind::BlastUnrolled => blast_unrolled(net, l, &exp.pool, holdout(exp)?, &student_center(cfg, exp), p.residual_alpha, p.holdout_batch, &tc),
        TeacherKind::BlastPg => {
            let spec = BlastPgSpec { mus: p.mus.clone(), source: p.label_source, reward: p.reward };
            blast_pg(net, l, &exp.pool, holdout(exp)?, &spec, &student_center(cfg, exp), &tc)
        }
        k => Err(Error::Incompatible(format!("teacher {k} has no learnable policy"))),
    }
}

/// The evaluation policy of a trained network.
pub fn policy(cfg: &ExperimentConfig, exp: &Experiment, net: &TeacherNet) -> Result<Box<dyn TeachingPolicy>> {
    let p = &cfg.param;
    Ok(match cfg.teacher.kind {
        TeacherKind::Unrolled => Box::new(LabelNetPolicy { net: net.clone(), w_star: p.include_target.then(|| exp.w_star.clone()) }),
        TeacherKind::Pg => Box::new(ActionPolicy {
            net: net.clone(),
            actions: p.actions.clone(),
            w_star: exp.w_star.clone(),
            eta: cfg.learner.schedule.eta(0),
            state_scale: p.state_scale,
        }),
        TeacherKind::BlastUnrolled => {
            let mut n = net.clone();
            n.set_head(Head::Residual { alpha: p.residual_alpha })?;
            Box::new(LabelNetPolicy { net: n, w_star: None })
        }
        TeacherKind::BlastPg => Box::new(MuPolicy { net: net.clone(), mus: p.mus.clone(), source: p.label_source }),
        k => return Err(Error::Incompatible(format!("teacher {k} has no learnable policy"))),
    })
}

/// Teacher and SGD evaluation traces under the same frozen protocol.
///
/// Distances are reported for every teacher; validation curves use the test
/// split when present, otherwise the validation split.
pub fn eval_teacher(cfg: &ExperimentConfig, exp: &Experiment, net: &TeacherNet) -> Result<(EvalTrace, EvalTrace)> {
    let pol = policy(cfg, exp, net)?;
    let center = student_center(cfg, exp);
    let val = exp.test.as_ref().or(exp.val.as_ref());
    let ec = eval_config(cfg);
    let eta = cfg.learner.schedule.eta(0);
    let run = |p: &dyn TeachingPolicy| evaluate(p, &exp.learner, &exp.pool, &center, Some(&exp.w_star), val, eta, &ec);
    Ok((run(pol.as_ref())?, run(&SgdPolicy)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Config;
    use crate::harness::setup::prepare;

    fn cfg(over: &[&str]) -> (ExperimentConfig, Experiment) {
        let mut c = Config::default();
        c.apply_overrides(&["dataset.kind=clusters", "dataset.n_per_class=30", "dataset.offset=1", "learner.kind=multiclass", "learner.eta=0.1"]).unwrap();
        c.apply_overrides(&["teacher.episodes=2", "teacher.horizon=5", "teacher.unroll=3", "teacher.n_students=2", "run.eval_steps=5", "run.eval_students=2", "dataset.val_fraction=0.3"])
            .unwrap();
        c.apply_overrides(over).unwrap();
        let cfg = ExperimentConfig::from_config(&c).unwrap();
        let exp = prepare(&cfg).unwrap();
        (cfg, exp)
    }

    #[test]
    fn every_learnable_teacher_trains_and_evaluates() {
        for k in ["unrolled", "pg", "blast_unrolled", "blast_pg"] {
            let (c, e) = cfg(&[&format!("teacher.kind={k}")]);
            let mut net = new_teacher_net(&c, &e).unwrap();
            let log = train_teacher(&c, &e, &mut net).unwrap();
            assert_eq!(log.episodes.len(), 2, "{k}");
            let (t, s) = eval_teacher(&c, &e, &net).unwrap();
            assert_eq!(t.t, s.t);
            assert_eq!(t.dist.len(), 6);
            assert_eq!(t.val_loss.len(), 6);
        }
    }

    #[test]
    fn greedy_kinds_have_no_network() {
        let (c, e) = cfg(&["teacher.kind=sgd"]);
        assert!(new_teacher_net(&c, &e).is_err());
    }
}
