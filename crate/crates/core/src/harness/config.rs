//! Flat `key = value` experiment configuration.
//!
//! Every key has a default; files and overrides may only set known keys.
//! Lines starting with `#` are comments. The resolved form printed by
//! [`Config::render`] is itself a valid config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::greedy::{Anchor, ArmijoConfig, LabelConstraint, PNorm};
use crate::learners::{Activation, StepSchedule};
use crate::param::{ActionSpace, Baseline, LabelSource, TerminalReward};

/// `(key, default, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("dataset.kind", "linreg", "linreg | clusters | moons | mnist | file"),
    ("dataset.n", "800", "linreg: number of examples"),
    ("dataset.d", "4", "linreg / clusters: feature dimension"),
    ("dataset.noise_sd", "0.02", "linreg: label noise; moons: point noise"),
    ("dataset.intercept", "0", "linreg: constant added to every label"),
    ("dataset.n_per_class", "400", "clusters / moons: examples per class"),
    ("dataset.offset", "0.2", "clusters: per-coordinate class mean offset"),
    ("dataset.images", "", "mnist: IDX image file"),
    ("dataset.labels", "", "mnist: IDX label file"),
    ("dataset.digits", "3,5", "mnist: digits kept, in class order"),
    ("dataset.proj_dim", "24", "mnist: random feature dimension"),
    ("dataset.subset", "1000", "mnist: seeded subset size (0 keeps all)"),
    ("dataset.path", "", "file: saved pool"),
    ("dataset.add_bias", "false", "append a constant 1 feature"),
    ("dataset.val_fraction", "0", "held-out validation fraction"),
    ("dataset.test_fraction", "0", "held-out test fraction"),
    ("dataset.seed", "0", "generator / projection / split seed"),
    ("learner.kind", "lsr", "lsr | lr | multiclass | mlp"),
    ("learner.lambda", "5e-5", "L2 regularization"),
    ("learner.eta", "0.001", "initial step size"),
    ("learner.eta_decay", "0", "eta_t = eta / (1 + decay t)"),
    ("learner.hidden", "16", "mlp: hidden units"),
    ("learner.activation", "leaky_relu", "mlp: relu | leaky_relu"),
    ("learner.leak", "0.01", "leaky_relu negative slope"),
    ("learner.init", "gaussian", "gaussian | zero | around_target"),
    ("learner.init_sd", "1", "initial weight standard deviation"),
    ("teacher.kind", "last_nc", "sgd | imt | last | last_nc | mixed | et | armijo | super_et | unrolled | pg | blast_unrolled | blast_pg"),
    ("teacher.constraint", "none", "none | onehot | simplex | magnitude"),
    ("teacher.radius", "1", "magnitude constraint radius"),
    ("teacher.p", "2", "magnitude constraint norm: 1 | 2 | inf"),
    ("teacher.anchor", "ground_truth", "magnitude constraint center: prediction | ground_truth"),
    ("teacher.imt_subsample", "0", "imt / mixed: scan this many random examples (0 = whole pool)"),
    ("teacher.c1", "1", "et: gain constant"),
    ("teacher.c2", "0.5", "armijo: sufficient-decrease constant"),
    ("teacher.armijo_factor", "0.5", "armijo: backtracking factor"),
    ("teacher.armijo_g_max", "1e4", "armijo: first gain tried"),
    ("teacher.alpha", "0.5", "super_et: Hessian interpolation"),
    ("teacher.hidden", "32", "teacher network hidden sizes, comma separated"),
    ("teacher.activation", "leaky_relu", "teacher network activation: relu | leaky_relu"),
    ("teacher.include_target", "true", "unrolled: feed w* to the teacher"),
    ("teacher.standardize", "true", "standardize teacher inputs with statistics of sampled initial states"),
    ("teacher.episodes", "1000", "training episodes"),
    ("teacher.n_students", "10", "students per episode"),
    ("teacher.unroll", "20", "unrolled steps per episode"),
    ("teacher.reset_rate", "0.2", "fraction of students reset after an unrolled episode"),
    ("teacher.decay", "0.95", "weight decay of earlier unrolled losses"),
    ("teacher.horizon", "100", "policy-gradient horizon"),
    ("teacher.gamma", "0.999", "policy-gradient discount"),
    ("teacher.baseline", "-0.1", "reward baseline: a number | none | batch_mean"),
    ("teacher.actions", "augmented", "pg label actions: augmented | simplex:<m>"),
    ("teacher.state_scale", "1", "pg: scale of the inner-product state features"),
    ("teacher.lr", "1e-3", "Adam learning rate"),
    ("teacher.weight_decay", "1e-4", "Adam decoupled weight decay"),
    ("teacher.residual_alpha", "0.5", "blast_unrolled: weight of the ground-truth label"),
    ("teacher.holdout_batch", "20", "blast_unrolled: hold-out examples per episode"),
    ("teacher.mu_lo", "0.5", "blast_pg: smallest mu"),
    ("teacher.mu_count", "6", "blast_pg: number of mu values"),
    ("teacher.label_source", "uniform", "blast_pg: uniform | prediction"),
    ("teacher.reward", "accuracy", "blast_pg: accuracy | iters:<zeta>"),
    ("teacher.student_sd", "0.05", "student perturbation around the reference weights"),
    ("teacher.student_center", "target", "blast: student center, target | zero"),
    ("teacher.checkpoint", "", "checkpoint that train-teacher resumes from and eval-teacher loads"),
    ("run.iterations", "1000", "teaching iterations T"),
    ("run.epsilon", "0", "stop once the distance to w* drops below epsilon"),
    ("run.seeds", "0..50", "seeds: a..b (half open), a list, or one value"),
    ("run.batch", "1", "examples per learner step"),
    ("run.eval_batch", "0", "examples per step when evaluating a trained teacher (0: run.batch)"),
    ("run.record_every", "1", "trace recording interval"),
    ("run.timing", "true", "record wall-clock times (false writes zeros)"),
    ("run.eval_steps", "300", "teacher evaluation: learner steps"),
    ("run.eval_students", "10", "teacher evaluation: students"),
    ("run.eval_seed", "12345", "teacher evaluation: frozen draw seed"),
    ("run.eval_every", "0", "teacher training: evaluate every this many episodes"),
];

/// Raw string configuration restricted to [`KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect() }
    }
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut c = Config::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key = value, got {line:?}", n + 1)))?;
            c.set(k.trim(), v.trim()).map_err(|e| Error::Config(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.to_string();
                Ok(())
            }
            None => Err(Error::Config(unknown_key(key))),
        }
    }

    /// Applies `key=value` overrides in order; the last one wins.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared config key {key}"))
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.get(key);
        v.parse().map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.typed(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.typed(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.typed(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.typed(key)
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.get(key);
        v.split(',').map(|s| s.trim().parse().map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))).collect()
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        parse_seeds(self.get("run.seeds"))
    }

    /// Sorted `key = value` lines.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn unknown_key(key: &str) -> String {
    let close: Vec<&str> = KEYS.iter().map(|k| k.0).filter(|k| edit_distance(k, key) <= 3 || k.ends_with(key)).collect();
    if close.is_empty() {
        format!("unknown key {key:?}")
    } else {
        format!("unknown key {key:?} (did you mean {}?)", close.join(", "))
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(ca != *cb)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// `a..b` (half open), `a,b,c`, or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = |e: &dyn fmt::Display| Error::Config(format!("run.seeds = {s:?}: {e}"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| bad(&e))?;
        let b: u64 = b.trim().parse().map_err(|e| bad(&e))?;
        (a..b).collect()
    } else {
        s.split(',').map(|v| v.trim().parse().map_err(|e| bad(&e))).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad(&"no seeds"));
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Linreg { n: usize, d: usize, noise_sd: f64, intercept: f64 },
    Clusters { n_per_class: usize, d: usize, offset: f64 },
    Moons { n_per_class: usize, noise_sd: f64 },
    Mnist { images: PathBuf, labels: PathBuf, digits: Vec<u8>, proj_dim: usize, subset: Option<usize> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerChoice {
    Lsr,
    Lr,
    Multiclass,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    Gaussian,
    Zero,
    AroundTarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSpec {
    pub kind: LearnerChoice,
    pub lambda: f64,
    pub schedule: StepSchedule,
    pub hidden: usize,
    pub activation: Activation,
    pub init: InitScheme,
    pub init_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeacherKind {
    Sgd,
    Imt,
    Last,
    LastNc,
    Mixed,
    Et,
    Armijo,
    SuperEt,
    Unrolled,
    Pg,
    BlastUnrolled,
    BlastPg,
}

impl TeacherKind {
    pub const ALL: [(&'static str, TeacherKind); 12] = [
        ("sgd", TeacherKind::Sgd),
        ("imt", TeacherKind::Imt),
        ("last", TeacherKind::Last),
        ("last_nc", TeacherKind::LastNc),
        ("mixed", TeacherKind::Mixed),
        ("et", TeacherKind::Et),
        ("armijo", TeacherKind::Armijo),
        ("super_et", TeacherKind::SuperEt),
        ("unrolled", TeacherKind::Unrolled),
        ("pg", TeacherKind::Pg),
        ("blast_unrolled", TeacherKind::BlastUnrolled),
        ("blast_pg", TeacherKind::BlastPg),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).expect("listed").0
    }

    /// Learnable policies, trained by `train-teacher`.
    pub fn is_parameterized(self) -> bool {
        matches!(self, TeacherKind::Unrolled | TeacherKind::Pg | TeacherKind::BlastUnrolled | TeacherKind::BlastPg)
    }
}

impl FromStr for TeacherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, k)| *k)
            .ok_or_else(|| Error::Config(format!("unknown teacher kind {s:?}")))
    }
}

impl fmt::Display for TeacherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherSpec {
    pub kind: TeacherKind,
    pub constraint: LabelConstraint,
    pub imt_subsample: Option<usize>,
    pub c1: f64,
    pub armijo: ArmijoConfig,
    pub alpha: f64,
}

/// Settings of the learnable teachers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub include_target: bool,
    pub standardize: bool,
    pub episodes: usize,
    pub n_students: usize,
    pub unroll: usize,
    pub reset_rate: f64,
    pub decay: f64,
    pub horizon: usize,
    pub gamma: f64,
    pub baseline: Baseline,
    pub actions: ActionSpace,
    pub state_scale: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub residual_alpha: f64,
    pub holdout_batch: usize,
    pub mus: ActionSpace,
    pub label_source: LabelSource,
    pub reward: TerminalReward,
    pub student_sd: f64,
    pub center_at_target: bool,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub iterations: usize,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    pub batch: usize,
    pub eval_batch: usize,
    pub record_every: usize,
    pub timing: bool,
    pub eval_steps: usize,
    pub eval_students: usize,
    pub eval_seed: u64,
    pub eval_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub dataset_seed: u64,
    pub add_bias: bool,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub learner: LearnerSpec,
    pub teacher: TeacherSpec,
    pub param: ParamSpec,
    pub run: RunSpec,
}

fn activation(c: &Config, key: &str) -> Result<Activation> {
    match c.get(key) {
        "relu" => Ok(Activation::Relu),
        "leaky_relu" => Ok(Activation::LeakyRelu(c.f64("learner.leak")?)),
        v => Err(Error::Config(format!("{key} = {v:?}: expected relu | leaky_relu"))),
    }
}

fn path_or_none(s: &str) -> Option<PathBuf> {
    (!s.is_empty()).then(|| PathBuf::from(s))
}

impl ExperimentConfig {
    pub fn from_config(c: &Config) -> Result<Self> {
        let dataset = match c.get("dataset.kind") {
            "linreg" => DatasetSpec::Linreg {
                n: c.usize("dataset.n")?,
                d: c.usize("dataset.d")?,
                noise_sd: c.f64("dataset.noise_sd")?,
                intercept: c.f64("dataset.intercept")?,
            },
            "clusters" => DatasetSpec::Clusters { n_per_class: c.usize("dataset.n_per_class")?, d: c.usize("dataset.d")?, offset: c.f64("dataset.offset")? },
            "moons" => DatasetSpec::Moons { n_per_class: c.usize("dataset.n_per_class")?, noise_sd: c.f64("dataset.noise_sd")? },
            "mnist" => {
                let images = path_or_none(c.get("dataset.images")).ok_or_else(|| Error::Config("dataset.images must be set for mnist".into()))?;
                let labels = path_or_none(c.get("dataset.labels")).ok_or_else(|| Error::Config("dataset.labels must be set for mnist".into()))?;
                let digits = c.usize_list("dataset.digits")?;
                if digits.iter().any(|d| *d > 9) {
                    return Err(Error::Config(format!("dataset.digits must be 0..=9, got {digits:?}")));
                }
                let subset = c.usize("dataset.subset")?;
                DatasetSpec::Mnist {
                    images,
                    labels,
                    digits: digits.into_iter().map(|d| d as u8).collect(),
                    proj_dim: c.usize("dataset.proj_dim")?,
                    subset: (subset > 0).then_some(subset),
                }
            }
            "file" => DatasetSpec::File { path: path_or_none(c.get("dataset.path")).ok_or_else(|| Error::Config("dataset.path must be set for file".into()))? },
            v => return Err(Error::Config(format!("dataset.kind = {v:?}: expected linreg | clusters | moons | mnist | file"))),
        };
        let kind = match c.get("learner.kind") {
            "lsr" => LearnerChoice::Lsr,
            "lr" => LearnerChoice::Lr,
            "multiclass" => LearnerChoice::Multiclass,
            "mlp" => LearnerChoice::Mlp,
            v => return Err(Error::Config(format!("learner.kind = {v:?}: expected lsr | lr | multiclass | mlp"))),
        };
        let eta = c.f64("learner.eta")?;
        let decay = c.f64("learner.eta_decay")?;
        let schedule = if decay == 0.0 { StepSchedule::Constant(eta) } else { StepSchedule::InverseDecay { eta0: eta, decay } };
        schedule.validate()?;
        let init = match c.get("learner.init") {
            "gaussian" => InitScheme::Gaussian,
            "zero" => InitScheme::Zero,
            "around_target" => InitScheme::AroundTarget,
            v => return Err(Error::Config(format!("learner.init = {v:?}: expected gaussian | zero | around_target"))),
        };
        let learner = LearnerSpec {
            kind,
            lambda: c.f64("learner.lambda")?,
            schedule,
            hidden: c.usize("learner.hidden")?,
            activation: activation(c, "learner.activation")?,
            init,
            init_sd: c.f64("learner.init_sd")?,
        };
        let constraint = match c.get("teacher.constraint") {
            "none" => LabelConstraint::None,
            "onehot" => LabelConstraint::OneHot,
            "simplex" => LabelConstraint::Simplex,
            "magnitude" => LabelConstraint::Magnitude {
                p: match c.get("teacher.p") {
                    "1" => PNorm::L1,
                    "2" => PNorm::L2,
                    "inf" => PNorm::Inf,
                    v => return Err(Error::Config(format!("teacher.p = {v:?}: expected 1 | 2 | inf"))),
                },
                radius: c.f64("teacher.radius")?,
                anchor: match c.get("teacher.anchor") {
                    "prediction" => Anchor::Prediction,
                    "ground_truth" => Anchor::GroundTruth,
                    v => return Err(Error::Config(format!("teacher.anchor = {v:?}: expected prediction | ground_truth"))),
                },
            },
            v => return Err(Error::Config(format!("teacher.constraint = {v:?}: expected none | onehot | simplex | magnitude"))),
        };
        let sub = c.usize("teacher.imt_subsample")?;
        let armijo = ArmijoConfig {
            c2: c.f64("teacher.c2")?,
            factor: c.f64("teacher.armijo_factor")?,
            g_max: c.f64("teacher.armijo_g_max")?,
            ..ArmijoConfig::default()
        };
        armijo.validate()?;
        let teacher = TeacherSpec {
            kind: c.get("teacher.kind").parse()?,
            constraint,
            imt_subsample: (sub > 0).then_some(sub),
            c1: c.f64("teacher.c1")?,
            armijo,
            alpha: c.f64("teacher.alpha")?,
        };
        let param = ParamSpec {
            hidden: c.usize_list("teacher.hidden")?,
            activation: activation(c, "teacher.activation")?,
            include_target: c.bool("teacher.include_target")?,
            standardize: c.bool("teacher.standardize")?,
            episodes: c.usize("teacher.episodes")?,
            n_students: c.usize("teacher.n_students")?,
            unroll: c.usize("teacher.unroll")?,
            reset_rate: c.f64("teacher.reset_rate")?,
            decay: c.f64("teacher.decay")?,
            horizon: c.usize("teacher.horizon")?,
            gamma: c.f64("teacher.gamma")?,
            baseline: match c.get("teacher.baseline") {
                "none" => Baseline::None,
                "batch_mean" => Baseline::BatchMean,
                _ => Baseline::Constant(c.f64("teacher.baseline")?),
            },
            actions: match c.get("teacher.actions") {
                "augmented" => ActionSpace::binary_augmented(),
                v => match v.strip_prefix("simplex:") {
                    Some(m) => ActionSpace::binary_simplex(m.parse().map_err(|e| Error::Config(format!("teacher.actions = {v:?}: {e}")))?)?,
                    None => return Err(Error::Config(format!("teacher.actions = {v:?}: expected augmented | simplex:<m>"))),
                },
            },
            state_scale: c.f64("teacher.state_scale")?,
            lr: c.f64("teacher.lr")?,
            weight_decay: c.f64("teacher.weight_decay")?,
            residual_alpha: c.f64("teacher.residual_alpha")?,
            holdout_batch: c.usize("teacher.holdout_batch")?,
            mus: ActionSpace::mu_grid(c.f64("teacher.mu_lo")?, c.usize("teacher.mu_count")?)?,
            label_source: match c.get("teacher.label_source") {
                "uniform" => LabelSource::Uniform,
                "prediction" => LabelSource::Prediction,
                v => return Err(Error::Config(format!("teacher.label_source = {v:?}: expected uniform | prediction"))),
            },
            reward: match c.get("teacher.reward") {
                "accuracy" => TerminalReward::Accuracy,
                v => match v.strip_prefix("iters:") {
                    Some(z) => TerminalReward::ItersToAccuracy { zeta: z.parse().map_err(|e| Error::Config(format!("teacher.reward = {v:?}: {e}")))? },
                    None => return Err(Error::Config(format!("teacher.reward = {v:?}: expected accuracy | iters:<zeta>"))),
                },
            },
            student_sd: c.f64("teacher.student_sd")?,
            center_at_target: match c.get("teacher.student_center") {
                "target" => true,
                "zero" => false,
                v => return Err(Error::Config(format!("teacher.student_center = {v:?}: expected target | zero"))),
            },
            checkpoint: path_or_none(c.get("teacher.checkpoint")),
        };
        let run = RunSpec {
            iterations: c.usize("run.iterations")?,
            epsilon: c.f64("run.epsilon")?,
            seeds: c.seeds()?,
            batch: c.usize("run.batch")?,
            eval_batch: match c.usize("run.eval_batch")? {
                0 => c.usize("run.batch")?,
                b => b,
            },
            record_every: c.usize("run.record_every")?,
            timing: c.bool("run.timing")?,
            eval_steps: c.usize("run.eval_steps")?,
            eval_students: c.usize("run.eval_students")?,
            eval_seed: c.u64("run.eval_seed")?,
            eval_every: c.usize("run.eval_every")?,
        };
        if run.iterations == 0 || run.batch == 0 || run.record_every == 0 {
            return Err(Error::Config("run.iterations, run.batch and run.record_every must be positive".into()));
        }
        if !(run.epsilon >= 0.0) {
            return Err(Error::Config(format!("run.epsilon must be >= 0, got {}", run.epsilon)));
        }
        let cfg = ExperimentConfig {
            dataset,
            dataset_seed: c.u64("dataset.seed")?,
            add_bias: c.bool("dataset.add_bias")?,
            val_fraction: c.f64("dataset.val_fraction")?,
            test_fraction: c.f64("dataset.test_fraction")?,
            learner,
            teacher,
            param,
            run,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Teacher / learner compatibility checks done before any work starts.
    pub fn validate(&self) -> Result<()> {
        let (f_val, f_test) = (self.val_fraction, self.test_fraction);
        if !(0.0..1.0).contains(&f_val) || !(0.0..1.0).contains(&f_test) || f_val + f_test >= 1.0 {
            return Err(Error::Config("val and test fractions must be in [0,1) and leave training data".into()));
        }
        let regression = matches!(self.dataset, DatasetSpec::Linreg { .. });
        let vector = matches!(self.learner.kind, LearnerChoice::Multiclass | LearnerChoice::Mlp);
        match self.learner.kind {
            LearnerChoice::Lsr if !regression && !matches!(self.dataset, DatasetSpec::File { .. }) => {
                return Err(Error::Incompatible("the lsr learner needs regression data".into()));
            }
            LearnerChoice::Lr | LearnerChoice::Multiclass | LearnerChoice::Mlp if regression => {
                return Err(Error::Incompatible(format!("{:?} needs classification data", self.learner.kind)));
            }
            _ => {}
        }
        let k = self.teacher.kind;
        if matches!(k, TeacherKind::Et | TeacherKind::Armijo | TeacherKind::SuperEt) && self.learner.kind != LearnerChoice::Lsr {
            return Err(Error::Incompatible(format!("teacher {k} is implemented for the lsr learner")));
        }
        if matches!(self.teacher.constraint, LabelConstraint::OneHot | LabelConstraint::Simplex) && !vector && matches!(k, TeacherKind::Last | TeacherKind::Mixed) {
            return Err(Error::Incompatible("onehot / simplex constraints need a vector-label learner".into()));
        }
        if matches!(k, TeacherKind::Pg | TeacherKind::BlastUnrolled | TeacherKind::BlastPg) && !vector {
            return Err(Error::Incompatible(format!("teacher {k} needs a vector-label learner")));
        }
        if matches!(k, TeacherKind::BlastUnrolled | TeacherKind::BlastPg) && f_val == 0.0 {
            return Err(Error::Incompatible(format!("teacher {k} needs dataset.val_fraction > 0 for its hold-out set")));
        }
        if self.param.hidden.is_empty() || self.param.hidden.contains(&0) {
            return Err(Error::Config("teacher.hidden needs positive sizes".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = ExperimentConfig::from_config(&Config::default()).unwrap();
        assert_eq!(c.run.seeds.len(), 50);
        assert_eq!(c.teacher.kind, TeacherKind::LastNc);
        assert_eq!(c.learner.schedule, StepSchedule::Constant(0.001));
    }

    #[test]
    fn unknown_keys_are_rejected_with_suggestion() {
        let e = Config::parse("run.iteration = 5", "x.cfg").unwrap_err().to_string();
        assert!(e.contains("x.cfg:1") && e.contains("run.iterations"), "{e}");
        let mut c = Config::default();
        assert!(c.apply_overrides(&["nope=1"]).is_err());
        assert!(c.apply_overrides(&["no_equals"]).is_err());
    }

    #[test]
    fn last_override_wins_and_render_round_trips() {
        let mut c = Config::parse("# comment\nteacher.kind = imt\n\nrun.seeds = 3,4\n", "t").unwrap();
        c.apply_overrides(&["teacher.kind=sgd", "teacher.kind = mixed"]).unwrap();
        assert_eq!(c.get("teacher.kind"), "mixed");
        assert_eq!(Config::parse(&c.render(), "r").unwrap(), c);
        assert_eq!(c.seeds().unwrap(), vec![3, 4]);
    }

    #[test]
    fn seeds_forms() {
        assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn incompatible_pairs_fail_preflight() {
        let mut c = Config::default();
        c.set("teacher.kind", "et").unwrap();
        c.set("learner.kind", "lr").unwrap();
        c.set("dataset.kind", "clusters").unwrap();
        assert!(matches!(ExperimentConfig::from_config(&c), Err(Error::Incompatible(_))));
        c.set("teacher.kind", "sgd").unwrap();
        c.set("dataset.kind", "linreg").unwrap();
        assert!(matches!(ExperimentConfig::from_config(&c), Err(Error::Incompatible(_))));
    }
}
