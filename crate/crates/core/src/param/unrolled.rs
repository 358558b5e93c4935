//! Teachers trained by differentiating through unrolled learner updates.

use rayon::prelude::*;

use super::eval::{evaluate, LabelNetPolicy};
use super::net::{adam_step, AdamState, Head, TeacherNet};
use super::state::{data_loss_tape, grad_tape, predict_tape, StateLayout};
use super::{stream_id, EpisodeConfig, EpisodeLog, TrainConfig, TrainLog};
use crate::data::Pool;
use crate::error::{check_len, Error, Result};
use crate::learners::Learner;
use crate::numerics::{sq_dist, SeededRng, Tape, Var};

/// What the unrolled loss measures after each inner step.
#[derive(Debug, Clone, Copy)]
pub enum UnrollObjective<'a> {
    /// `‖wᵗ − w*‖²`.
    Target(&'a [f64]),
    /// Mean ground-truth data loss on a fresh batch of this size from the pool.
    Holdout(&'a Pool, usize),
}

/// One unrolled episode's inner-loop settings.
#[derive(Debug, Clone, Copy)]
pub struct UnrollSpec<'a> {
    pub episode: EpisodeConfig,
    pub eta: f64,
    pub batch: usize,
    pub objective: UnrollObjective<'a>,
    /// Appends `w*` to the teacher state (omniscient variant only).
    pub state_target: Option<&'a [f64]>,
}

struct StudentRollout {
    loss: f64,
    grad: Vec<f64>,
    w_final: Vec<f64>,
}

fn rollout(net: &TeacherNet, learner: &Learner, pool: &Pool, spec: &UnrollSpec, w0: &[f64], rng: &mut SeededRng) -> Result<StudentRollout> {
    let mut tape = Tape::new();
    let layers = net.tape_params(&mut tape);
    let mut w = tape.constant(w0);
    let target = match spec.objective {
        UnrollObjective::Target(ws) => Some(tape.constant(ws)),
        UnrollObjective::Holdout(..) => None,
    };
    let state_target = spec.state_target.map(|t| tape.constant(t));
    let mut total: Option<Var> = None;
    let v = spec.episode.unroll;
    for t in 1..=v {
        let mut gsum: Option<Var> = None;
        for _ in 0..spec.batch {
            let e = pool.get(rng.below(pool.len()));
            let x = tape.constant(&e.x);
            let yt = tape.constant(&e.y);
            let pred = predict_tape(&mut tape, learner, w, x)?;
            let mut parts = vec![x, yt, w];
            parts.extend(state_target);
            parts.push(pred);
            let state = tape.concat(&parts);
            let y = net.label_tape(&mut tape, &layers, state, &e.y)?;
            let g = grad_tape(&mut tape, learner, w, x, y)?;
            gsum = Some(match gsum {
                None => g,
                Some(s) => tape.add(s, g)?,
            });
        }
        let g = tape.scale(gsum.expect("batch >= 1"), 1.0 / spec.batch as f64);
        let step = tape.scale(g, spec.eta);
        w = tape.sub(w, step)?;
        let term = match spec.objective {
            UnrollObjective::Target(_) => {
                let d = tape.sub(w, target.expect("target objective"))?;
                tape.sq_norm(d)
            }
            UnrollObjective::Holdout(hold, m) => {
                let mut acc: Option<Var> = None;
                for _ in 0..m {
                    let e = hold.get(rng.below(hold.len()));
                    let (x, y) = (tape.constant(&e.x), tape.constant(&e.y));
                    let l = data_loss_tape(&mut tape, learner, w, x, y)?;
                    acc = Some(match acc {
                        None => l,
                        Some(a) => tape.add(a, l)?,
                    });
                }
                tape.scale(acc.expect("holdout batch >= 1"), 1.0 / m as f64)
            }
        };
        let term = tape.scale(term, spec.episode.unroll_weight(t));
        total = Some(match total {
            None => term,
            Some(a) => tape.add(a, term)?,
        });
    }
    let total = total.expect("unroll >= 1");
    let grads = tape.backward(total)?;
    Ok(StudentRollout { loss: tape.scalar_value(total), grad: net.gather_grad(&grads, &layers), w_final: tape.value(w).to_vec() })
}

/// Student-averaged unrolled loss, its gradient in the teacher parameters and
/// the students' final weights. Student `s` draws from `streams.child(s)`.
pub fn unrolled_objective(net: &TeacherNet, learner: &Learner, pool: &Pool, students: &[Vec<f64>], spec: &UnrollSpec, streams: &SeededRng) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    if students.is_empty() {
        return Err(Error::Empty("student population"));
    }
    if pool.is_empty() {
        return Err(Error::Empty("teaching pool"));
    }
    if spec.batch == 0 {
        return Err(Error::InvalidArg("batch must be >= 1".into()));
    }
    if let UnrollObjective::Holdout(h, m) = spec.objective {
        if h.is_empty() || m == 0 {
            return Err(Error::Empty("hold-out pool"));
        }
    }
    spec.episode.validate()?;
    check_len("teacher input vs state", StateLayout::new(learner, spec.state_target.is_some()).len(), net.input_len())?;
    for s in students {
        check_len("student weights", learner.param_len(), s.len())?;
    }
    let outs = students
        .par_iter()
        .enumerate()
        .map(|(s, w0)| rollout(net, learner, pool, spec, w0, &mut streams.child(s as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n = students.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; net.params().len()];
    for o in &outs {
        loss += o.loss;
        grad.iter_mut().zip(&o.grad).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad, outs.into_iter().map(|o| o.w_final).collect()))
}

fn init_student(center: &[f64], sd: f64, rng: &mut SeededRng) -> Vec<f64> {
    center.iter().zip(rng.normal_vec(center.len(), sd)).map(|(c, n)| c + n).collect()
}

struct UnrollTask<'a> {
    learner: &'a Learner,
    pool: &'a Pool,
    objective: UnrollObjective<'a>,
    center: &'a [f64],
    state_target: Option<&'a [f64]>,
    eval: &'a dyn Fn(&TeacherNet) -> Result<f64>,
}

fn train_unrolled(net: &mut TeacherNet, task: UnrollTask, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    let ep = cfg.episode;
    let root = SeededRng::new(cfg.seed);
    let mut students: Vec<Vec<f64>> = (0..ep.n_students).map(|s| init_student(task.center, cfg.init_sd, &mut root.child(stream_id(3, 0, s)))).collect();
    let mut adam = AdamState::new(net.params().len(), cfg.adam)?;
    let spec = UnrollSpec { episode: ep, eta: cfg.eta, batch: cfg.batch, objective: task.objective, state_target: task.state_target };
    let mut log = TrainLog { initial_eval: (task.eval)(net)?, ..Default::default() };
    for e in 0..cfg.episodes {
        let streams = root.child(stream_id(4, e, 0));
        let (loss, grad, finals) = unrolled_objective(net, task.learner, task.pool, &students, &spec, &streams)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let dists: Vec<String> = match task.objective {
                UnrollObjective::Target(ws) => finals.iter().map(|w| format!("{:.3e}", sq_dist(w, ws).sqrt())).collect(),
                UnrollObjective::Holdout(..) => finals.iter().map(|w| format!("{:.3e}", w.iter().map(|v| v * v).sum::<f64>().sqrt())).collect(),
            };
            return Err(Error::NonFinite(format!("episode {e}: unrolled loss {loss}; student final norms/distances [{}]", dists.join(", "))));
        }
        adam_step(net.params_mut(), &grad, &mut adam)?;
        students = finals;
        for (s, w) in students.iter_mut().enumerate().take(ep.reset_count()) {
            *w = init_student(task.center, cfg.init_sd, &mut root.child(stream_id(5, e, s)));
        }
        let eval = (cfg.eval_every > 0 && (e + 1) % cfg.eval_every == 0).then(|| (task.eval)(net)).transpose()?;
        log.episodes.push(EpisodeLog { episode: e, objective: loss, eval });
    }
    log.final_eval = (task.eval)(net)?;
    Ok(log)
}

/// Trains a label-output teacher by unrolling `v` SGD steps and minimizing the
/// decay-weighted `Σ_t ‖wᵗ − w*‖²`. Students start at `w* + N(0, init_sd²)`.
/// The evaluation metric is the final mean distance under `cfg.eval`.
pub fn train_unrolled_omniscient(net: &mut TeacherNet, learner: &Learner, pool: &Pool, w_star: &[f64], include_target: bool, cfg: &TrainConfig) -> Result<TrainLog> {
    check_len("target weights", learner.param_len(), w_star.len())?;
    let state_target = include_target.then_some(w_star);
    let eval = |n: &TeacherNet| -> Result<f64> {
        let pol = LabelNetPolicy { net: n.clone(), w_star: state_target.map(<[f64]>::to_vec) };
        let tr = evaluate(&pol, learner, pool, w_star, Some(w_star), None, cfg.eta, &cfg.eval)?;
        Ok(tr.final_dist().expect("target given"))
    };
    let task = UnrollTask { learner, pool, objective: UnrollObjective::Target(w_star), center: w_star, state_target, eval: &eval };
    train_unrolled(net, task, cfg)
}

/// Black-box unrolled teacher. The head is set to the residual form with the
/// given `alpha`; the inner loss after each step is the ground-truth data loss
/// on `holdout_batch` fresh draws from `d_a`. The evaluation metric is the
/// final validation loss on `d_a`.
#[allow(clippy::too_many_arguments)]
pub fn blast_unrolled(
    net: &mut TeacherNet,
    learner: &Learner,
    d_r: &Pool,
    d_a: &Pool,
    center: &[f64],
    alpha: f64,
    holdout_batch: usize,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArg(format!("residual alpha must lie in (0,1], got {alpha}")));
    }
    if !learner.is_vector_label() {
        return Err(Error::Incompatible("the residual head needs a vector-label learner".into()));
    }
    net.set_head(Head::Residual { alpha })?;
    check_len("student center", learner.param_len(), center.len())?;
    let eval = |n: &TeacherNet| -> Result<f64> {
        let pol = LabelNetPolicy { net: n.clone(), w_star: None };
        let tr = evaluate(&pol, learner, d_r, center, None, Some(d_a), cfg.eta, &cfg.eval)?;
        Ok(tr.final_val_loss().expect("validation pool given"))
    };
    let task = UnrollTask { learner, pool: d_r, objective: UnrollObjective::Holdout(d_a, holdout_batch), center, state_target: None, eval: &eval };
    train_unrolled(net, task, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_gaussian_clusters;
    use crate::learners::{Activation, LearnerKind};
    use crate::numerics::rel_err;

    fn setup() -> (Learner, Pool, Vec<f64>) {
        let pool = gen_gaussian_clusters(15, 3, 1.0, 2).unwrap().binary_as_classes().unwrap();
        let l = Learner::new(LearnerKind::Multiclass { classes: 2 }, 3, 0.0, false).unwrap();
        (l, pool, vec![0.5, -0.5, 0.3, -0.3, 0.1, -0.2])
    }

    fn fd_check(v: usize, objective_holdout: bool) {
        let (l, pool, ws) = setup();
        let lay = StateLayout::new(&l, false);
        let head = if objective_holdout { Head::Residual { alpha: 0.5 } } else { Head::Softmax };
        let net = TeacherNet::new(&[lay.len(), 6, 2], Activation::LeakyRelu(0.1), head, &mut SeededRng::new(7)).unwrap();
        let mut r = SeededRng::new(8);
        let students: Vec<Vec<f64>> = (0..2).map(|_| ws.iter().map(|w| w + 0.3 * r.normal()).collect()).collect();
        let objective = if objective_holdout { UnrollObjective::Holdout(&pool, 3) } else { UnrollObjective::Target(&ws) };
        let spec = UnrollSpec { episode: EpisodeConfig { unroll: v, ..Default::default() }, eta: 0.5, batch: 2, objective, state_target: None };
        let streams = SeededRng::new(9);
        let (_, g, _) = unrolled_objective(&net, &l, &pool, &students, &spec, &streams).unwrap();
        let f = |p: &[f64]| {
            let n = TeacherNet::from_params(net.sizes(), net.activation(), net.head(), p.to_vec()).unwrap();
            unrolled_objective(&n, &l, &pool, &students, &spec, &streams).unwrap().0
        };
        let fd = crate::numerics::finite_diff_grad(f, net.params(), 1e-6).unwrap();
        let err = rel_err(&g, &fd, 1e-7);
        assert!(err < 1e-4, "v={v} holdout={objective_holdout}: rel err {err}");
    }

    #[test]
    fn unrolled_gradient_matches_finite_differences() {
        for v in [1, 5, 20] {
            fd_check(v, false);
        }
        fd_check(3, true);
    }

    #[test]
    fn residual_alpha_one_teacher_is_sgd() {
        let (l, pool, ws) = setup();
        let lay = StateLayout::new(&l, false);
        let net = TeacherNet::new(&[lay.len(), 5, 2], Activation::Relu, Head::Residual { alpha: 1.0 }, &mut SeededRng::new(1)).unwrap();
        let cfg = crate::param::EvalConfig { steps: 40, batch: 3, n_students: 3, ..Default::default() };
        let a = evaluate(&LabelNetPolicy { net, w_star: None }, &l, &pool, &ws, Some(&ws), Some(&pool), 0.2, &cfg).unwrap();
        let b = evaluate(&crate::param::SgdPolicy, &l, &pool, &ws, Some(&ws), Some(&pool), 0.2, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_is_deterministic_and_improves_tiny_instance() {
        let (l, pool, ws) = setup();
        let lay = StateLayout::new(&l, false);
        let mk = || TeacherNet::new(&[lay.len(), 16, 2], Activation::Relu, Head::Softmax, &mut SeededRng::new(3)).unwrap();
        let cfg = TrainConfig {
            episodes: 60,
            eta: 0.2,
            init_sd: 0.3,
            episode: EpisodeConfig { unroll: 5, n_students: 4, ..Default::default() },
            adam: crate::param::AdamConfig { lr: 1e-2, ..Default::default() },
            eval: crate::param::EvalConfig { steps: 20, n_students: 4, init_sd: 0.3, ..Default::default() },
            ..Default::default()
        };
        let (mut n1, mut n2) = (mk(), mk());
        let l1 = train_unrolled_omniscient(&mut n1, &l, &pool, &ws, false, &cfg).unwrap();
        let l2 = train_unrolled_omniscient(&mut n2, &l, &pool, &ws, false, &cfg).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(n1, n2);
        assert!(l1.final_eval < l1.initial_eval, "{} vs {}", l1.final_eval, l1.initial_eval);
    }
}
