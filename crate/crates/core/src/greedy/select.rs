use super::discrepancy::discrepancy_g;
use super::synth::synth_label;
use super::LabelConstraint;
use crate::data::Pool;
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::numerics::SeededRng;

/// Example selection with ground-truth labels: `argmin_i G(x_i, ỹ_i | w)`.
///
/// With `subsample = Some((m, rng))` only `m` uniformly drawn indices (with
/// replacement) are scanned. Ties go to the lowest pool index.
pub fn imt_select(
    learner: &Learner,
    pool: &Pool,
    w: &[f64],
    w_star: &[f64],
    eta: f64,
    subsample: Option<(usize, &mut SeededRng)>,
) -> Result<(usize, f64)> {
    if pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    let candidates: Vec<usize> = match subsample {
        None => (0..pool.len()).collect(),
        Some((m, rng)) => (0..m.max(1)).map(|_| rng.below(pool.len())).collect(),
    };
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let e = pool.get(i);
        let g = discrepancy_g(learner, &e.x, &e.y, w, w_star, eta)?.g;
        best = match best {
            Some((bi, bg)) if bg < g || (bg == g && bi < i) => Some((bi, bg)),
            _ => Some((i, g)),
        };
    }
    Ok(best.expect("nonempty"))
}

/// Mixed teaching: pick the example by [`imt_select`], then synthesize its label.
pub fn mixed_teach_step(
    learner: &Learner,
    pool: &Pool,
    w: &[f64],
    w_star: &[f64],
    eta: f64,
    constraint: &LabelConstraint,
    subsample: Option<(usize, &mut SeededRng)>,
) -> Result<(usize, Vec<f64>)> {
    let (i, _) = imt_select(learner, pool, w, w_star, eta, subsample)?;
    let e = pool.get(i);
    let y = synth_label(learner, &e.x, &e.y, w, w_star, eta, constraint)?;
    Ok((i, y))
}
