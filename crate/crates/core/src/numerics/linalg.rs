use crate::error::{check_len, Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Checked constructor: rejects a wrong buffer length and any NaN/Inf entry.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("Matrix::new", rows * cols, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {i}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    fn to_na(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("dot", a.len(), b.len())?;
    Ok(dot_unchecked(a, b))
}

pub fn matvec(m: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("matvec", m.cols, v.len())?;
    Ok((0..m.rows).map(|i| dot_unchecked(m.row(i), v)).collect())
}

/// `Mᵀ v`.
pub fn matvec_t(m: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("matvec_t", m.rows, v.len())?;
    let mut out = vec![0.0; m.cols];
    for (i, &vi) in v.iter().enumerate() {
        axpy(vi, m.row(i), &mut out);
    }
    Ok(out)
}

pub fn norm2(v: &[f64]) -> f64 {
    sq_norm(v).sqrt()
}

pub fn frobenius(m: &Matrix) -> f64 {
    norm2(&m.data)
}

pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `‖a − b‖²`.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += a·x`
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solve `A x = b` for symmetric positive definite `A` by Cholesky.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows != a.cols {
        return Err(Error::InvalidArg(format!(
            "cholesky_solve needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    check_len("cholesky_solve", a.rows, b.len())?;
    let chol = a
        .to_na()
        .cholesky()
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    // Cholesky succeeds on numerically rank-deficient inputs with tiny pivots.
    let diag = chol.l_dirty().diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min > max * 1e-7) {
        return Err(Error::Singular(format!(
            "ill-conditioned Cholesky factor (pivot ratio {:.3e})",
            min / max
        )));
    }
    let x = chol.solve(&nalgebra::DVector::from_column_slice(b));
    Ok(x.iter().copied().collect())
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if a.rows != a.cols {
        return Err(Error::InvalidArg("sym_eigenvalues needs a square matrix".into()));
    }
    let mut ev: Vec<f64> = a.to_na().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `Xᵀ X / n` for the rows of `xs`.
pub fn second_moment(xs: &[&[f64]]) -> Result<Matrix> {
    let first = xs.first().ok_or(Error::Empty("second_moment"))?;
    let d = first.len();
    let mut m = Matrix::zeros(d, d);
    for x in xs {
        check_len("second_moment", d, x.len())?;
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] += x[i] * x[j];
            }
        }
    }
    let n = xs.len() as f64;
    m.data.iter_mut().for_each(|v| *v /= n);
    Ok(m)
}
