//! Teaching pools: synthetic generators, projected MNIST and the on-disk pool format.

mod format;
mod mnist;
mod synth;

pub use format::{load_pool, read_pool, save_pool, write_pool};
pub use mnist::{load_mnist_projected, read_idx_images, read_idx_labels, MnistOptions, Projection};
pub use synth::{gen_gaussian_clusters, gen_half_moon, gen_linreg};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// How labels are encoded in a pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Scalar real target.
    Regression,
    /// Scalar `±1`. Two-class vector form maps `+1 ↦ (1,0)` and `−1 ↦ (0,1)`.
    Binary,
    /// One-hot vector of the given length.
    Classes(usize),
}

impl LabelKind {
    pub fn label_len(self) -> usize {
        match self {
            LabelKind::Regression | LabelKind::Binary => 1,
            LabelKind::Classes(k) => k,
        }
    }

    fn validate(self, y: &[f64]) -> Result<()> {
        if y.len() != self.label_len() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArg(format!("label {y:?} invalid for {self:?}")));
        }
        match self {
            LabelKind::Regression => Ok(()),
            LabelKind::Binary if y[0] == 1.0 || y[0] == -1.0 => Ok(()),
            LabelKind::Classes(_)
                if y.iter().all(|v| *v == 0.0 || *v == 1.0) && y.iter().filter(|v| **v == 1.0).count() == 1 =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidArg(format!("label {y:?} invalid for {self:?}"))),
        }
    }
}

/// `+1 ↦ (1,0)`, `−1 ↦ (0,1)`.
pub fn binary_to_onehot(y: f64) -> [f64; 2] {
    if y >= 0.0 {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

pub fn onehot(class: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[class] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Disjoint index sets into a pool.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    examples: Vec<Example>,
    dim: usize,
    label_kind: LabelKind,
    seed: u64,
    splits: Option<Splits>,
}

impl Pool {
    pub fn new(examples: Vec<Example>, label_kind: LabelKind, seed: u64) -> Result<Self> {
        let dim = examples.first().ok_or(Error::Empty("pool"))?.x.len();
        for e in &examples {
            if e.x.len() != dim {
                return Err(Error::DimMismatch { op: "Pool::new", expected: dim, got: e.x.len() });
            }
            if e.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("features of example {}", e.id)));
            }
            label_kind.validate(&e.y)?;
        }
        Ok(Self { examples, dim, label_kind, seed, splits: None })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label_kind(&self) -> LabelKind {
        self.label_kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    pub fn splits(&self) -> Option<&Splits> {
        self.splits.as_ref()
    }

    pub fn set_splits(&mut self, s: Splits) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for &i in s.train.iter().chain(&s.val).chain(&s.test) {
            if i >= self.len() || seen[i] {
                return Err(Error::InvalidArg(format!("split index {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        self.splits = Some(s);
        Ok(())
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.examples.iter().map(|e| e.x.as_slice()).collect()
    }

    /// Copy with a constant 1 appended to every feature vector.
    pub fn with_bias(&self) -> Pool {
        let examples = self
            .examples
            .iter()
            .map(|e| {
                let mut x = e.x.clone();
                x.push(1.0);
                Example { id: e.id, x, y: e.y.clone() }
            })
            .collect();
        Pool { examples, dim: self.dim + 1, label_kind: self.label_kind, seed: self.seed, splits: self.splits.clone() }
    }

    /// Sub-pool of the given indices, keeping example ids.
    pub fn subset(&self, idx: &[usize]) -> Result<Pool> {
        if idx.is_empty() {
            return Err(Error::Empty("pool subset"));
        }
        let examples = idx
            .iter()
            .map(|&i| self.examples.get(i).cloned().ok_or_else(|| Error::InvalidArg(format!("index {i} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Pool { examples, dim: self.dim, label_kind: self.label_kind, seed: self.seed, splits: None })
    }

    /// Same features with labels converted to two-class one-hot (`Binary` pools only).
    pub fn binary_as_classes(&self) -> Result<Pool> {
        if self.label_kind != LabelKind::Binary {
            return Err(Error::Incompatible(format!("{:?} pool is not binary", self.label_kind)));
        }
        let examples = self
            .examples
            .iter()
            .map(|e| Example { id: e.id, x: e.x.clone(), y: binary_to_onehot(e.y[0]).to_vec() })
            .collect();
        Ok(Pool { examples, dim: self.dim, label_kind: LabelKind::Classes(2), seed: self.seed, splits: self.splits.clone() })
    }
}

/// Uniform draw with replacement; returns the pool index.
pub fn sample_index(pool: &Pool, rng: &mut SeededRng) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    Ok(rng.below(pool.len()))
}

pub fn sample_uniform<'a>(pool: &'a Pool, rng: &mut SeededRng) -> Result<&'a Example> {
    Ok(pool.get(sample_index(pool, rng)?))
}

/// Shuffled disjoint partition by `fractions = (train, val, test)`.
///
/// Counts are `⌊f·n⌋` for validation and test; train takes the remainder.
pub fn split(pool: &Pool, fractions: [f64; 3], rng: &mut SeededRng) -> Result<(Pool, Option<Pool>, Option<Pool>)> {
    if pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArg(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let n = pool.len();
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    let n_val = (fractions[1] * n as f64).floor() as usize;
    let n_test = (fractions[2] * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    let part = |s: &[usize]| if s.is_empty() { Ok(None) } else { pool.subset(s).map(Some) };
    let train = pool.subset(&idx[..n_train])?;
    let val = part(&idx[n_train..n_train + n_val])?;
    let test = part(&idx[n_train + n_val..])?;
    Ok((train, val, test))
}
