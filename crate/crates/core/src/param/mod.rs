//! Learnable teaching policies.
//!
//! Omniscient teachers see `w*` and are trained either by differentiating
//! through `v` unrolled learner steps or by REINFORCE over a discrete label
//! set. The black-box variants never see `w*`: the unrolled one minimizes a
//! hold-out loss, the policy-gradient one picks a smoothing weight `μ` and is
//! rewarded on a hold-out set.

mod eval;
mod net;
mod pg;
mod state;
mod unrolled;

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) use eval::pool_loss_acc;
pub use eval::{evaluate, ActionPolicy, EvalConfig, EvalTrace, LabelNetPolicy, MuPolicy, SgdPolicy, TeachingPolicy};
pub use net::{adam_step, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, AdamConfig, AdamState, Head, LayerVars, TeacherNet};
pub use pg::{blast_pg, blast_pg_gradient, pg_gradient, train_pg_omniscient, BlastPgSpec, LabelSource, TerminalReward};
pub use state::{build_state_omniscient, build_state_pg, data_loss_tape, grad_tape, predict_tape, StateLayout};
pub use unrolled::{blast_unrolled, train_unrolled_omniscient, unrolled_objective, UnrollObjective, UnrollSpec};

/// Baseline subtracted from rewards in the policy-gradient estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    None,
    Constant(f64),
    /// Mean over the students of the same episode (per step for per-step rewards).
    BatchMean,
}

/// Weighting of the per-step unrolled losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayOrder {
    /// `decay^(v−t)`: the last step has weight 1.
    Reverse,
    /// `decay^t`.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    /// Policy-gradient horizon `T`.
    pub horizon: usize,
    pub gamma: f64,
    pub baseline: Baseline,
    pub n_students: usize,
    /// Fraction of students reinitialized after each unrolled episode.
    pub reset_rate: f64,
    /// Unroll length `v`.
    pub unroll: usize,
    pub decay: f64,
    pub decay_order: DecayOrder,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            gamma: 0.999,
            baseline: Baseline::Constant(-0.1),
            n_students: 10,
            reset_rate: 0.2,
            unroll: 20,
            decay: 0.95,
            decay_order: DecayOrder::Reverse,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.unroll == 0 || self.n_students == 0 {
            return Err(Error::InvalidArg("horizon, unroll length and student count must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArg(format!("gamma must lie in (0,1], got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.reset_rate) || !(self.decay > 0.0) {
            return Err(Error::InvalidArg("reset rate must lie in [0,1] and decay must be positive".into()));
        }
        Ok(())
    }

    /// Students `0..reset_count()` are reinitialized after each episode.
    pub fn reset_count(&self) -> usize {
        ((self.reset_rate * self.n_students as f64).ceil() as usize).min(self.n_students)
    }

    /// Weight of the loss after step `t ∈ 1..=v`.
    pub fn unroll_weight(&self, t: usize) -> f64 {
        match self.decay_order {
            DecayOrder::Reverse => self.decay.powi((self.unroll - t) as i32),
            DecayOrder::Forward => self.decay.powi(t as i32),
        }
    }
}

/// Ordered discrete actions: label vectors, or 1-vectors `[μ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    actions: Vec<Vec<f64>>,
}

impl ActionSpace {
    pub fn new(actions: Vec<Vec<f64>>) -> Result<Self> {
        let first = actions.first().ok_or(Error::Empty("action space"))?;
        if actions.iter().any(|a| a.len() != first.len() || a.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArg("actions must be finite and of equal length".into()));
        }
        Ok(Self { actions })
    }

    /// The ten binary labels `(a, b)` with `a + b ∈ {1, 2}` on a 0.25 / 0.5 grid.
    pub fn binary_augmented() -> Self {
        let mut a: Vec<Vec<f64>> = (0..5).map(|i| vec![0.25 * i as f64, 1.0 - 0.25 * i as f64]).collect();
        a.extend((0..5).map(|i| vec![0.5 * i as f64, 2.0 - 0.5 * i as f64]));
        Self { actions: a }
    }

    /// `m` evenly spaced binary labels from `(0,1)` to `(1,0)`.
    pub fn binary_simplex(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArg("need at least two grid points".into()));
        }
        Self::new((0..m).map(|i| i as f64 / (m - 1) as f64).map(|a| vec![a, 1.0 - a]).collect())
    }

    /// `m` evenly spaced `μ` values in `[lo, 1]`.
    pub fn mu_grid(lo: f64, m: usize) -> Result<Self> {
        if m < 1 || !(lo <= 1.0) {
            return Err(Error::InvalidArg("bad μ grid".into()));
        }
        if m == 1 {
            return Self::new(vec![vec![1.0]]);
        }
        Self::new((0..m).map(|i| vec![lo + (1.0 - lo) * i as f64 / (m - 1) as f64]).collect())
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.actions[i]
    }
}

/// Knobs shared by the trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episode: EpisodeConfig,
    pub episodes: usize,
    /// Learner step size.
    pub eta: f64,
    /// Examples per learner step.
    pub batch: usize,
    /// Students start at `center + N(0, init_sd²)`.
    pub init_sd: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Evaluate every this many episodes (0: only before and after training).
    pub eval_every: usize,
    pub eval: EvalConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episode: EpisodeConfig::default(),
            episodes: 1000,
            eta: 5e-4,
            batch: 1,
            init_sd: 5e-2,
            adam: AdamConfig::default(),
            seed: 0,
            eval_every: 0,
            eval: EvalConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        if !(self.eta > 0.0) || self.batch == 0 || !(self.init_sd >= 0.0) {
            return Err(Error::InvalidArg("eta > 0, batch >= 1 and init_sd >= 0 required".into()));
        }
        self.eval.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Training objective (unrolled loss, or mean return / reward for policy gradient).
    pub objective: f64,
    /// Evaluation metric, when evaluated after this episode.
    pub eval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub episodes: Vec<EpisodeLog>,
    /// Evaluation before the first update.
    pub initial_eval: f64,
    pub final_eval: f64,
}

/// CSV with header `episode,objective,eval` (empty `eval` when not evaluated).
pub fn write_training_log(path: impl AsRef<Path>, log: &TrainLog) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["episode", "objective", "eval"]).map_err(csv_err)?;
    for e in &log.episodes {
        let ev = e.eval.map(|v| format!("{v:?}")).unwrap_or_default();
        w.write_record([e.episode.to_string(), format!("{:?}", e.objective), ev]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Stream id for `(tag, episode, student)`.
pub(crate) fn stream_id(tag: u64, episode: usize, student: usize) -> u64 {
    (tag << 56) ^ ((episode as u64) << 20) ^ student as u64
}
