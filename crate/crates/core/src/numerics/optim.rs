use crate::error::{Error, Result};

/// Central-difference gradient of `f` at `w`.
pub fn finite_diff_grad(mut f: impl FnMut(&[f64]) -> f64, w: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArg(format!("finite difference step must be > 0, got {eps}")));
    }
    let mut p = w.to_vec();
    let mut g = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        p[i] = w[i] + eps;
        let fp = f(&p);
        p[i] = w[i] - eps;
        let fm = f(&p);
        p[i] = w[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite(format!("objective near coordinate {i}")));
        }
        g.push((fp - fm) / (2.0 * eps));
    }
    Ok(g)
}

/// Largest number of grid cells scanned by [`minimize_1d`] before refinement.
pub const MAX_GRID_CELLS: usize = 2000;

/// Global-then-local 1-D minimization on `[lo, hi]`.
///
/// Scans a uniform grid of `min(⌈(hi−lo)/tol⌉, MAX_GRID_CELLS)` cells (endpoints
/// included), then runs golden-section search on the two cells around the best
/// grid point until the bracket is narrower than `tol`. The returned point is the
/// best of the refined point and the grid minimum, so it is never worse than
/// either endpoint.
pub fn minimize_1d(mut phi: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArg(format!("minimize_1d needs lo < hi and tol > 0 (lo={lo}, hi={hi}, tol={tol})")));
    }
    let mut eval = |y: f64| -> Result<f64> {
        let v = phi(y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("objective at {y}")))
        }
    };
    let cells = (((hi - lo) / tol).ceil() as usize).clamp(1, MAX_GRID_CELLS);
    let h = (hi - lo) / cells as f64;
    let mut best = (lo, eval(lo)?);
    for i in 1..=cells {
        let y = if i == cells { hi } else { lo + h * i as f64 };
        let v = eval(y)?;
        if v < best.1 {
            best = (y, v);
        }
    }
    let mut a = (best.0 - h).max(lo);
    let mut b = (best.0 + h).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = eval(mid)?;
    for (y, v) in [(c, fc), (d, fd), (mid, fm)] {
        if v < best.1 {
            best = (y, v);
        }
    }
    Ok(best.0)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Empty("project_simplex"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("project_simplex input".into()));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // One correction pass keeps the sum within rounding of 1.
    let s: f64 = out.iter().sum();
    let support = out.iter().filter(|x| **x > 0.0).count().max(1) as f64;
    let shift = (1.0 - s) / support;
    for x in out.iter_mut().filter(|x| **x > 0.0) {
        *x = (*x + shift).max(0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fd_of_quadratic_and_constant() {
        let g = finite_diff_grad(|w| 0.5 * (w[0] * w[0] + w[1] * w[1]), &[1.0, 2.0], 1e-6).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-6 && (g[1] - 2.0).abs() < 2e-6);
        let z = finite_diff_grad(|_| 3.0, &[0.3, -4.0, 9.0], 1e-4).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert!(finite_diff_grad(|_| f64::NAN, &[0.0], 1e-4).is_err());
        assert!(finite_diff_grad(|_| 0.0, &[0.0], 0.0).is_err());
    }

    #[test]
    fn minimize_examples() {
        let y = minimize_1d(|y| (y - 3.0) * (y - 3.0), -10.0, 10.0, 1e-6).unwrap();
        assert!((y - 3.0).abs() < 1e-5);
        let y = minimize_1d(f64::cos, 0.0, 2.0 * PI, 1e-6).unwrap();
        assert!((y - PI).abs() < 1e-5);
        assert!(minimize_1d(|y| y, 1.0, 0.0, 1e-3).is_err());
        assert!(minimize_1d(|_| f64::INFINITY, 0.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn minimize_finds_global_of_bimodal() {
        let phi = |y: f64| (y * y - 1.0).powi(2) + 0.3 * y;
        let y = minimize_1d(phi, -3.0, 3.0, 1e-8).unwrap();
        assert!(y < 0.0);
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(project_simplex(&[]).is_err());
    }

    #[test]
    fn simplex_matches_grid_qp_oracle() {
        // Exhaustive search over a fine grid of the 2-simplex.
        let v = [2.0, 0.0];
        let p = project_simplex(&v).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let a = i as f64 / 100_000.0;
            let d = (a - v[0]).powi(2) + (1.0 - a - v[1]).powi(2);
            if d < best.0 {
                best = (d, a);
            }
        }
        assert!((p[0] - best.1).abs() < 1e-5);
        assert_eq!(p, vec![1.0, 0.0]);
    }
}
