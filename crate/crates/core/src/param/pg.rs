//! REINFORCE-trained teachers over discrete actions.

use rayon::prelude::*;

use super::eval::{evaluate, pool_loss_acc, ActionPolicy, MuPolicy};
use super::net::{adam_step, AdamState, Head, TeacherNet};
use super::state::{build_state_omniscient, build_state_pg, StateLayout};
use super::{stream_id, ActionSpace, Baseline, EpisodeConfig, EpisodeLog, TrainConfig, TrainLog};
use crate::data::{onehot, Pool};
use crate::error::{check_len, Error, Result};
use crate::learners::Learner;
use crate::numerics::{softmax, sq_dist, SeededRng, Tape, Var};

/// Reference distribution `p` mixed into the ground truth by the `μ` policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    /// All-`1/K` (label-smoothing style).
    Uniform,
    /// The learner's own prediction (self-training style).
    Prediction,
}

impl LabelSource {
    /// `μỹ + (1−μ)p`.
    pub fn mix(self, learner: &Learner, x: &[f64], y_true: &[f64], w: &[f64], mu: f64) -> Vec<f64> {
        let p = match self {
            LabelSource::Uniform => vec![1.0 / y_true.len() as f64; y_true.len()],
            LabelSource::Prediction => learner.predict(w, x),
        };
        y_true.iter().zip(&p).map(|(t, pi)| mu * t + (1.0 - mu) * pi).collect()
    }
}

/// Terminal reward of the black-box policy-gradient teacher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalReward {
    /// Hold-out accuracy after `T` steps.
    Accuracy,
    /// `−(first step at which hold-out accuracy ≥ ζ)`, or `−T` if never reached.
    ItersToAccuracy { zeta: f64 },
}

struct Trajectory {
    tape: Tape,
    layers: Vec<super::net::LayerVars>,
    /// Cross-entropy of the sampled action per step (one entry per decision).
    ce: Vec<(usize, Var)>,
    rewards: Vec<f64>,
}

fn check_net(net: &TeacherNet, input: usize, outputs: usize) -> Result<()> {
    check_len("teacher input vs state", input, net.input_len())?;
    check_len("teacher outputs vs actions", outputs, net.output_len())?;
    if net.head() != Head::Logits {
        return Err(Error::Incompatible("policy-gradient teachers need a logits head".into()));
    }
    Ok(())
}

/// Samples one action on the tape, returning its index and `−log π(a|s)`.
fn sample_action(net: &TeacherNet, tape: &mut Tape, layers: &[super::net::LayerVars], state: &[f64], rng: &mut SeededRng) -> Result<(usize, Var)> {
    let s = tape.constant(state);
    let logits = net.forward_tape(tape, layers, s)?;
    let probs = softmax(tape.value(logits));
    let a = rng.categorical(&probs);
    let t = tape.constant(&onehot(a, probs.len()));
    Ok((a, tape.cross_entropy(logits, t)?))
}

fn per_step_baselines(trajs: &[Trajectory], baseline: Baseline, horizon: usize) -> Vec<f64> {
    match baseline {
        Baseline::None => vec![0.0; horizon],
        Baseline::Constant(b) => vec![b; horizon],
        Baseline::BatchMean => (0..horizon).map(|t| trajs.iter().map(|tr| tr.rewards[t]).sum::<f64>() / trajs.len() as f64).collect(),
    }
}

/// `(1/N) Σ_i Σ_t coefᵢₜ ∇log π(aₜ|sₜ)` from per-decision coefficients.
fn policy_gradient(net: &TeacherNet, trajs: Vec<Trajectory>, coefs: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = trajs.len() as f64;
    let grads = trajs
        .into_par_iter()
        .zip(coefs)
        .map(|(mut tr, coef)| -> Result<Vec<f64>> {
            let mut loss: Option<Var> = None;
            for (step, ce) in &tr.ce {
                // CE = −log π, so descending Σ coef·CE ascends the objective.
                let term = tr.tape.scale(*ce, coef[*step]);
                loss = Some(match loss {
                    None => term,
                    Some(l) => tr.tape.add(l, term)?,
                });
            }
            let loss = loss.expect("at least one decision");
            let g = tr.tape.backward(loss)?;
            Ok(net.gather_grad(&g, &tr.layers).into_iter().map(|v| -v).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; net.params().len()];
    for g in &grads {
        out.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    out.iter_mut().for_each(|v| *v /= n);
    Ok(out)
}

/// One batch of omniscient REINFORCE episodes from the given starting weights.
/// Returns the ascent direction `∇J` and the mean discounted return
/// `Σ_t γᵗ rₜ` with `rₜ = −‖wᵗ − w*‖²`.
#[allow(clippy::too_many_arguments)]
pub fn pg_gradient(
    net: &TeacherNet,
    learner: &Learner,
    pool: &Pool,
    w_star: &[f64],
    actions: &ActionSpace,
    episode: &EpisodeConfig,
    eta: f64,
    state_scale: f64,
    students: &[Vec<f64>],
    streams: &SeededRng,
) -> Result<(Vec<f64>, f64)> {
    episode.validate()?;
    if students.is_empty() {
        return Err(Error::Empty("student population"));
    }
    if pool.is_empty() {
        return Err(Error::Empty("teaching pool"));
    }
    check_net(net, learner.param_len() + actions.len(), actions.len())?;
    let horizon = episode.horizon;
    let trajs = students
        .par_iter()
        .enumerate()
        .map(|(s, w0)| -> Result<Trajectory> {
            check_len("student weights", learner.param_len(), w0.len())?;
            let mut rng = streams.child(s as u64);
            let mut tape = Tape::new();
            let layers = net.tape_params(&mut tape);
            let mut w = w0.clone();
            let mut ce = Vec::with_capacity(horizon);
            let mut rewards = Vec::with_capacity(horizon);
            for t in 0..horizon {
                let e = pool.get(rng.below(pool.len()));
                let state = build_state_pg(learner, &w, w_star, &e.x, eta, actions.actions(), state_scale)?;
                let (a, c) = sample_action(net, &mut tape, &layers, &state, &mut rng)?;
                ce.push((t, c));
                w = crate::learners::sgd_step(&w, &learner.grad(&w, &e.x, actions.get(a))?, eta)?;
                let r = -sq_dist(&w, w_star);
                if !r.is_finite() {
                    return Err(Error::NonFinite(format!("reward of student {s} at step {}", t + 1)));
                }
                rewards.push(r);
            }
            Ok(Trajectory { tape, layers, ce, rewards })
        })
        .collect::<Result<Vec<_>>>()?;
    let b = per_step_baselines(&trajs, episode.baseline, horizon);
    let g = episode.gamma;
    let mut ret = 0.0;
    let coefs: Vec<Vec<f64>> = trajs
        .iter()
        .map(|tr| {
            // coefₜ = Σ_{τ≥t} γ^τ (r_τ − b_τ), steps numbered from 1.
            let mut c = vec![0.0; horizon];
            let mut acc = 0.0;
            for t in (0..horizon).rev() {
                acc += g.powi(t as i32 + 1) * (tr.rewards[t] - b[t]);
                c[t] = acc;
            }
            ret += tr.rewards.iter().enumerate().map(|(t, r)| g.powi(t as i32 + 1) * r).sum::<f64>();
            c
        })
        .collect();
    let n = trajs.len() as f64;
    Ok((policy_gradient(net, trajs, coefs)?, ret / n))
}

/// Omniscient REINFORCE teacher. Every episode starts all students afresh at
/// `w* + N(0, init_sd²)` and runs `T` sampled steps. The evaluation metric is
/// the final mean distance of the greedy policy under `cfg.eval`.
pub fn train_pg_omniscient(net: &mut TeacherNet, learner: &Learner, pool: &Pool, w_star: &[f64], actions: &ActionSpace, state_scale: f64, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    check_len("target weights", learner.param_len(), w_star.len())?;
    let root = SeededRng::new(cfg.seed);
    let mut adam = AdamState::new(net.params().len(), cfg.adam)?;
    let eval = |n: &TeacherNet| -> Result<f64> {
        let pol = ActionPolicy { net: n.clone(), actions: actions.clone(), w_star: w_star.to_vec(), eta: cfg.eta, state_scale };
        Ok(evaluate(&pol, learner, pool, w_star, Some(w_star), None, cfg.eta, &cfg.eval)?.final_dist().expect("target given"))
    };
    let mut log = TrainLog { initial_eval: eval(net)?, ..Default::default() };
    for e in 0..cfg.episodes {
        let students: Vec<Vec<f64>> = (0..cfg.episode.n_students)
            .map(|s| {
                let mut r = root.child(stream_id(5, e, s));
                w_star.iter().zip(r.normal_vec(w_star.len(), cfg.init_sd)).map(|(c, n)| c + n).collect()
            })
            .collect();
        let (grad, ret) = pg_gradient(net, learner, pool, w_star, actions, &cfg.episode, cfg.eta, state_scale, &students, &root.child(stream_id(4, e, 0)))?;
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        adam_step(net.params_mut(), &neg, &mut adam)?;
        let ev = (cfg.eval_every > 0 && (e + 1) % cfg.eval_every == 0).then(|| eval(net)).transpose()?;
        log.episodes.push(EpisodeLog { episode: e, objective: ret, eval: ev });
    }
    log.final_eval = eval(net)?;
    Ok(log)
}

/// Settings of the black-box `μ`-policy teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct BlastPgSpec {
    pub mus: ActionSpace,
    pub source: LabelSource,
    pub reward: TerminalReward,
}

/// One batch of black-box episodes; returns `∇J` and the mean terminal reward.
/// Each example of each step gets its own `μ` decision.
#[allow(clippy::too_many_arguments)]
pub fn blast_pg_gradient(
    net: &TeacherNet,
    learner: &Learner,
    d_r: &Pool,
    holdout: &Pool,
    spec: &BlastPgSpec,
    episode: &EpisodeConfig,
    eta: f64,
    batch: usize,
    students: &[Vec<f64>],
    streams: &SeededRng,
) -> Result<(Vec<f64>, f64)> {
    episode.validate()?;
    if holdout.is_empty() {
        return Err(Error::Empty("hold-out pool"));
    }
    if d_r.is_empty() || students.is_empty() {
        return Err(Error::Empty("teaching pool or students"));
    }
    if !learner.is_vector_label() || spec.mus.get(0).len() != 1 {
        return Err(Error::Incompatible("μ policies need a vector-label learner and scalar actions".into()));
    }
    check_net(net, StateLayout::new(learner, false).len(), spec.mus.len())?;
    let horizon = episode.horizon;
    let trajs = students
        .par_iter()
        .enumerate()
        .map(|(s, w0)| -> Result<Trajectory> {
            let mut rng = streams.child(s as u64);
            let mut tape = Tape::new();
            let layers = net.tape_params(&mut tape);
            let mut w = w0.clone();
            let mut ce = Vec::new();
            let mut reached = None;
            for t in 0..horizon {
                let mut gsum = vec![0.0; w.len()];
                for _ in 0..batch {
                    let e = d_r.get(rng.below(d_r.len()));
                    let state = build_state_omniscient(learner, &e.x, &e.y, &w, None)?;
                    let (a, c) = sample_action(net, &mut tape, &layers, &state, &mut rng)?;
                    ce.push((0, c));
                    let y = spec.source.mix(learner, &e.x, &e.y, &w, spec.mus.get(a)[0]);
                    gsum.iter_mut().zip(learner.grad(&w, &e.x, &y)?).for_each(|(a, b)| *a += b);
                }
                let b = batch as f64;
                w = w.iter().zip(&gsum).map(|(wi, gi)| wi - eta * (gi / b)).collect();
                if let TerminalReward::ItersToAccuracy { zeta } = spec.reward {
                    if reached.is_none() && pool_loss_acc(learner, &w, holdout).1 >= zeta {
                        reached = Some(t + 1);
                        break;
                    }
                }
            }
            let r = match spec.reward {
                TerminalReward::Accuracy => pool_loss_acc(learner, &w, holdout).1,
                TerminalReward::ItersToAccuracy { .. } => -(reached.unwrap_or(horizon) as f64),
            };
            if !r.is_finite() || w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("student {s} diverged")));
            }
            Ok(Trajectory { tape, layers, ce, rewards: vec![r] })
        })
        .collect::<Result<Vec<_>>>()?;
    let b = per_step_baselines(&trajs, episode.baseline, 1)[0];
    let n = trajs.len() as f64;
    let mean_r = trajs.iter().map(|t| t.rewards[0]).sum::<f64>() / n;
    let coefs = trajs.iter().map(|t| vec![t.rewards[0] - b]).collect();
    Ok((policy_gradient(net, trajs, coefs)?, mean_r))
}

/// Black-box REINFORCE teacher over `μ`. Students start at
/// `center + N(0, init_sd²)` every episode. The evaluation metric is the
/// greedy policy's final hold-out accuracy under `cfg.eval`.
pub fn blast_pg(net: &mut TeacherNet, learner: &Learner, d_r: &Pool, holdout: &Pool, spec: &BlastPgSpec, center: &[f64], cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    check_len("student center", learner.param_len(), center.len())?;
    let root = SeededRng::new(cfg.seed);
    let mut adam = AdamState::new(net.params().len(), cfg.adam)?;
    let eval = |n: &TeacherNet| -> Result<f64> {
        let pol = MuPolicy { net: n.clone(), mus: spec.mus.clone(), source: spec.source };
        let tr = evaluate(&pol, learner, d_r, center, None, Some(holdout), cfg.eta, &cfg.eval)?;
        Ok(*tr.val_acc.last().expect("hold-out given"))
    };
    let mut log = TrainLog { initial_eval: eval(net)?, ..Default::default() };
    for e in 0..cfg.episodes {
        let students: Vec<Vec<f64>> = (0..cfg.episode.n_students)
            .map(|s| {
                let mut r = root.child(stream_id(5, e, s));
                center.iter().zip(r.normal_vec(center.len(), cfg.init_sd)).map(|(c, n)| c + n).collect()
            })
            .collect();
        let (grad, reward) = blast_pg_gradient(net, learner, d_r, holdout, spec, &cfg.episode, cfg.eta, cfg.batch, &students, &root.child(stream_id(4, e, 0)))?;
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        adam_step(net.params_mut(), &neg, &mut adam)?;
        let ev = (cfg.eval_every > 0 && (e + 1) % cfg.eval_every == 0).then(|| eval(net)).transpose()?;
        log.episodes.push(EpisodeLog { episode: e, objective: reward, eval: ev });
    }
    log.final_eval = eval(net)?;
    Ok(log)
}
