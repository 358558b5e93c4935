//! Pools, learner and target built from an [`ExperimentConfig`].

use crate::data::{gen_gaussian_clusters, gen_half_moon, gen_linreg, load_mnist_projected, load_pool, split, Example, LabelKind, MnistOptions, Pool, Projection};
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerKind};
use crate::numerics::SeededRng;

use super::config::{DatasetSpec, ExperimentConfig, InitScheme, LearnerChoice};
use super::wstar::compute_wstar;

/// Everything a run needs besides the teacher.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Teaching pool.
    pub pool: Pool,
    pub val: Option<Pool>,
    pub test: Option<Pool>,
    pub learner: Learner,
    /// Minimizer of the regularized training objective.
    pub w_star: Vec<f64>,
}

/// Generator weights of the `linreg` dataset: `N(0, I)` from the dataset seed.
pub fn linreg_weights(d: usize, seed: u64) -> Vec<f64> {
    SeededRng::new(seed).child(0x77).normal_vec(d, 1.0)
}

/// Class 0 becomes `+1`, class 1 becomes `−1`.
fn classes_as_binary(pool: &Pool) -> Result<Pool> {
    if pool.label_kind() != LabelKind::Classes(2) {
        return Err(Error::Incompatible(format!("{:?} labels cannot be mapped to ±1", pool.label_kind())));
    }
    let ex = pool
        .examples()
        .iter()
        .map(|e| Example { id: e.id, x: e.x.clone(), y: vec![if e.y[0] >= e.y[1] { 1.0 } else { -1.0 }] })
        .collect();
    Pool::new(ex, LabelKind::Binary, pool.seed())
}

/// Generated or loaded pool, with bias column and label convention adapted to the learner.
pub fn build_pool(cfg: &ExperimentConfig) -> Result<Pool> {
    let seed = cfg.dataset_seed;
    let pool = match &cfg.dataset {
        DatasetSpec::Linreg { n, d, noise_sd, intercept } => gen_linreg(*n, *d, &linreg_weights(*d, seed), *intercept, *noise_sd, seed)?,
        DatasetSpec::Clusters { n_per_class, d, offset } => gen_gaussian_clusters(*n_per_class, *d, *offset, seed)?,
        DatasetSpec::Moons { n_per_class, noise_sd } => gen_half_moon(*n_per_class, *noise_sd, seed)?,
        DatasetSpec::Mnist { images, labels, digits, proj_dim, subset } => {
            let opts = MnistOptions { digits: digits.clone(), proj_dim: *proj_dim, subset: *subset, projection: Projection::Gaussian, seed };
            load_mnist_projected(images, labels, &opts)?
        }
        DatasetSpec::File { path } => load_pool(path)?,
    };
    let pool = if cfg.add_bias { pool.with_bias() } else { pool };
    match (cfg.learner.kind, pool.label_kind()) {
        (LearnerChoice::Lr, LabelKind::Classes(_)) => classes_as_binary(&pool),
        (LearnerChoice::Multiclass | LearnerChoice::Mlp, LabelKind::Binary) => pool.binary_as_classes(),
        (LearnerChoice::Lsr, LabelKind::Regression)
        | (LearnerChoice::Lr, LabelKind::Binary)
        | (LearnerChoice::Multiclass | LearnerChoice::Mlp, LabelKind::Classes(_)) => Ok(pool),
        (l, k) => Err(Error::Incompatible(format!("learner {l:?} cannot use {k:?} labels"))),
    }
}

pub fn build_learner(cfg: &ExperimentConfig, pool: &Pool) -> Result<Learner> {
    let l = &cfg.learner;
    let kind = match l.kind {
        LearnerChoice::Lsr => LearnerKind::Lsr,
        LearnerChoice::Lr => LearnerKind::Lr,
        LearnerChoice::Multiclass | LearnerChoice::Mlp => {
            let classes = match pool.label_kind() {
                LabelKind::Classes(k) => k,
                k => return Err(Error::Incompatible(format!("vector learner needs class labels, got {k:?}"))),
            };
            if l.kind == LearnerChoice::Mlp {
                LearnerKind::Mlp { hidden: l.hidden, classes, activation: l.activation }
            } else {
                LearnerKind::Multiclass { classes }
            }
        }
    };
    Learner::new(kind, pool.dim(), l.lambda, cfg.add_bias)
}

/// Builds pools (splitting off validation and test data), learner and `w*`.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Experiment> {
    let full = build_pool(cfg)?;
    let learner = build_learner(cfg, &full)?;
    let (pool, val, test) = if cfg.val_fraction > 0.0 || cfg.test_fraction > 0.0 {
        let f = [1.0 - cfg.val_fraction - cfg.test_fraction, cfg.val_fraction, cfg.test_fraction];
        split(&full, f, &mut SeededRng::new(cfg.dataset_seed).child(0x5b))?
    } else {
        (full, None, None)
    };
    let w_star = compute_wstar(&learner, &pool)?;
    Ok(Experiment { pool, val, test, learner, w_star })
}

/// Initial learner weights for one seed.
pub fn init_weights(cfg: &ExperimentConfig, exp: &Experiment, rng: &mut SeededRng) -> Vec<f64> {
    let n = exp.learner.param_len();
    let sd = cfg.learner.init_sd;
    match cfg.learner.init {
        InitScheme::Zero => vec![0.0; n],
        InitScheme::Gaussian => rng.normal_vec(n, sd),
        InitScheme::AroundTarget => exp.w_star.iter().zip(rng.normal_vec(n, sd)).map(|(a, b)| a + b).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Config;

    #[test]
    fn classification_pools_follow_the_learner() {
        let mut c = Config::default();
        c.apply_overrides(&["dataset.kind=clusters", "learner.kind=multiclass", "teacher.kind=sgd", "dataset.add_bias=true", "dataset.test_fraction=0.25"]).unwrap();
        let cfg = ExperimentConfig::from_config(&c).unwrap();
        let e = prepare(&cfg).unwrap();
        assert_eq!(e.pool.label_kind(), LabelKind::Classes(2));
        assert_eq!(e.learner.dim, 5);
        assert_eq!(e.pool.len() + e.test.as_ref().unwrap().len(), 800);
        assert_eq!(e.w_star.len(), 10);
    }

    #[test]
    fn binary_round_trip_through_classes() {
        let p = gen_gaussian_clusters(5, 2, 1.0, 3).unwrap();
        let back = classes_as_binary(&p.binary_as_classes().unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
