//! Seed aggregation, paired comparisons and line fits.

use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};

/// Pointwise mean and standard error over runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Aggregates equal-length runs. Standard errors use the `n − 1` sample
/// deviation and are 0 for a single run.
pub fn aggregate(runs: &[Vec<f64>]) -> Result<Curve> {
    let first = runs.first().ok_or(Error::Empty("runs"))?;
    let len = first.len();
    if let Some(r) = runs.iter().find(|r| r.len() != len) {
        return Err(Error::DimMismatch { op: "aggregate (ragged runs)", expected: len, got: r.len() });
    }
    let n = runs.len() as f64;
    let mut out = Curve { mean: Vec::with_capacity(len), stderr: Vec::with_capacity(len) };
    for i in 0..len {
        let m = runs.iter().map(|r| r[i]).sum::<f64>() / n;
        let se = if runs.len() > 1 {
            let var = runs.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        out.mean.push(m);
        out.stderr.push(se);
    }
    Ok(out)
}

/// `P(X ≥ k)` for `X ~ Binomial(n, ½)`.
pub fn sign_test_upper(k: usize, n: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let b = Binomial::new(0.5, n as u64).expect("valid binomial");
    b.sf(k as u64 - 1)
}

/// Paired comparison where smaller values are better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Paired {
    pub n: usize,
    /// Pairs with `a < b`.
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
    /// One-sided sign test of "a is smaller", ties dropped.
    pub p_value: f64,
}

pub fn paired(a: &[f64], b: &[f64]) -> Result<Paired> {
    crate::error::check_len("paired", a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::Empty("paired samples"));
    }
    let a_wins = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let b_wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let ties = a.len() - a_wins - b_wins;
    Ok(Paired { n: a.len(), a_wins, b_wins, ties, p_value: sign_test_upper(a_wins, a_wins + b_wins) })
}

/// Ordering of two sets of paired runs (smaller is better).
#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    /// Whether `mean_a[t] ≤ mean_b[t]` at each recorded point.
    pub a_le_b: Vec<bool>,
    pub mean_a: Curve,
    pub mean_b: Curve,
    /// Paired test on the final values.
    pub last: Paired,
}

impl Ordering {
    pub fn a_le_b_everywhere(&self) -> bool {
        self.a_le_b.iter().all(|v| *v)
    }

    pub fn fraction_a_le_b(&self) -> f64 {
        self.a_le_b.iter().filter(|v| **v).count() as f64 / self.a_le_b.len().max(1) as f64
    }
}

/// Compares runs `a[i]` and `b[i]`, which must share seeds and recording points.
pub fn compare(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Ordering> {
    crate::error::check_len("compare (run count)", a.len(), b.len())?;
    let ma = aggregate(a)?;
    let mb = aggregate(b)?;
    crate::error::check_len("compare (run length)", ma.mean.len(), mb.mean.len())?;
    let a_le_b = ma.mean.iter().zip(&mb.mean).map(|(x, y)| x <= y).collect();
    let la: Vec<f64> = a.iter().map(|r| *r.last().expect("nonempty")).collect();
    let lb: Vec<f64> = b.iter().map(|r| *r.last().expect("nonempty")).collect();
    Ok(Ordering { a_le_b, mean_a: ma, mean_b: mb, last: paired(&la, &lb)? })
}

/// Least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope (NaN with fewer than 3 points).
    pub slope_se: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    crate::error::check_len("line_fit", x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::InvalidArg("a line fit needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_se = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(LineFit { slope, intercept, r2, slope_se })
}
