//! Per-iteration teacher cost as a function of pool size.

use std::time::Instant;

use crate::data::gen_linreg;
use crate::error::{Error, Result};
use crate::greedy::{imt_select, synth_label, LabelConstraint};
use crate::learners::{Learner, LearnerKind};
use crate::numerics::SeededRng;

use super::stats::{line_fit, LineFit};
use super::wstar::compute_wstar;

#[derive(Debug, Clone, PartialEq)]
pub struct CostSettings {
    pub sizes: Vec<usize>,
    pub d: usize,
    /// Timed iterations per block; each block contributes its median.
    pub iters: usize,
    pub blocks: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Default for CostSettings {
    fn default() -> Self {
        Self { sizes: vec![100, 1000, 10_000], d: 4, iters: 1000, blocks: 5, eta: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// Pool size of each block.
    pub sizes: Vec<f64>,
    /// Median teacher microseconds per iteration, per block.
    pub imt_micros: Vec<f64>,
    pub last_micros: Vec<f64>,
    pub imt_fit: LineFit,
    pub last_fit: LineFit,
}

impl CostReport {
    /// IMT time grows linearly with the pool size.
    pub fn imt_linear(&self) -> bool {
        self.imt_fit.slope > 0.0 && self.imt_fit.r2 > 0.9
    }

    /// LAST slope within three standard errors of zero.
    pub fn last_flat(&self) -> bool {
        self.last_fit.slope.abs() <= 3.0 * self.last_fit.slope_se
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Times IMT selection and LAST synthesis on least-squares pools of each
/// size. Blocks cycle through the sizes so slow drifts hit every size alike.
pub fn cost_scaling(s: &CostSettings) -> Result<CostReport> {
    if s.sizes.len() < 2 || s.iters == 0 || s.blocks == 0 {
        return Err(Error::InvalidArg("cost scaling needs two sizes and positive iteration / block counts".into()));
    }
    let learner = Learner::new(LearnerKind::Lsr, s.d, 0.0, false)?;
    let w_true = SeededRng::new(s.seed).child(0x77).normal_vec(s.d, 1.0);
    let setups = s
        .sizes
        .iter()
        .map(|&n| {
            let pool = gen_linreg(n, s.d, &w_true, 0.0, 0.02, s.seed)?;
            let w_star = compute_wstar(&learner, &pool)?;
            Ok((pool, w_star))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = CostReport {
        sizes: Vec::new(),
        imt_micros: Vec::new(),
        last_micros: Vec::new(),
        imt_fit: LineFit { slope: 0.0, intercept: 0.0, r2: 0.0, slope_se: 0.0 },
        last_fit: LineFit { slope: 0.0, intercept: 0.0, r2: 0.0, slope_se: 0.0 },
    };
    for b in 0..s.blocks {
        for (n, (pool, w_star)) in s.sizes.iter().zip(&setups) {
            let root = SeededRng::new(s.seed).child(((b as u64) << 32) ^ *n as u64);
            let mut draws = root.child(1);
            let w0 = root.child(0).normal_vec(s.d, 1.0);
            let (mut imt, mut last) = (Vec::with_capacity(s.iters), Vec::with_capacity(s.iters));
            let mut w = w0.clone();
            for _ in 0..s.iters {
                let t0 = Instant::now();
                let (i, _) = imt_select(&learner, pool, &w, w_star, s.eta, None)?;
                imt.push(t0.elapsed().as_secs_f64() * 1e6);
                let e = pool.get(i);
                let g = learner.grad(&w, &e.x, &e.y)?;
                w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= s.eta * gi);
            }
            let mut w = w0;
            for _ in 0..s.iters {
                let t0 = Instant::now();
                let e = pool.get(draws.below(pool.len()));
                let y = synth_label(&learner, &e.x, &e.y, &w, w_star, s.eta, &LabelConstraint::None)?;
                last.push(t0.elapsed().as_secs_f64() * 1e6);
                let g = learner.grad(&w, &e.x, &y)?;
                w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= s.eta * gi);
            }
            rep.sizes.push(*n as f64);
            rep.imt_micros.push(median(&mut imt));
            rep.last_micros.push(median(&mut last));
        }
    }
    rep.imt_fit = line_fit(&rep.sizes, &rep.imt_micros)?;
    rep.last_fit = line_fit(&rep.sizes, &rep.last_micros)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn report_shape() {
        let r = cost_scaling(&CostSettings { sizes: vec![10, 200], iters: 20, blocks: 2, ..Default::default() }).unwrap();
        assert_eq!(r.sizes, vec![10.0, 200.0, 10.0, 200.0]);
        assert!(r.imt_micros.iter().all(|v| *v >= 0.0));
    }
}
