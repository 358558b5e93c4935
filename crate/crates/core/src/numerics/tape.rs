//! Minimal reverse-mode tape over vector-valued nodes.
//!
//! Nodes are appended in evaluation order, so operand indices are always smaller
//! than the node that uses them and a single reverse sweep is a valid reverse
//! topological order.

use crate::error::{check_len, Error, Result};
use crate::numerics::{log_sum_exp, softmax as softmax_values};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    MulScalar(usize, usize),
    Sum(usize),
    Dot(usize, usize),
    SqNorm(usize),
    MatVec { m: usize, v: usize, rows: usize, cols: usize },
    MatTVec { m: usize, v: usize, rows: usize, cols: usize },
    Outer(usize, usize),
    Affine { w: usize, b: usize, x: usize, rows: usize, cols: usize },
    LeakyRelu(usize, f64),
    ActivationDeriv,
    Softmax(usize),
    CrossEntropy(usize, usize),
    Concat(Vec<usize>),
    Slice(usize, usize),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Vec<f64>,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar root with respect to every node.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    lens: Vec<usize>,
}

impl Gradients {
    /// Gradient with respect to `v`; zeros if `v` does not influence the root.
    pub fn wrt(&self, v: Var) -> Vec<f64> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => vec![0.0; self.lens[v.0]],
        }
    }

    /// Adds the gradient of `v` into `out`.
    pub fn accumulate_into(&self, v: Var, out: &mut [f64]) {
        if let Some(g) = &self.grads[v.0] {
            for (o, gi) in out.iter_mut().zip(g) {
                *o += gi;
            }
        }
    }
}

fn leaky(u: f64, slope: f64) -> f64 {
    if u > 0.0 {
        u
    } else {
        slope * u
    }
}

fn leaky_deriv(u: f64, slope: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else {
        slope
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn vlen(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn constant(&mut self, value: &[f64]) -> Var {
        self.push(Op::Leaf, value.to_vec())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        check_len("tape add", self.vlen(a), self.vlen(b))?;
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        Ok(self.push(Op::Add(a.0, b.0), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        check_len("tape sub", self.vlen(a), self.vlen(b))?;
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x - y).collect();
        Ok(self.push(Op::Sub(a.0, b.0), v))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        check_len("tape mul", self.vlen(a), self.vlen(b))?;
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        Ok(self.push(Op::Mul(a.0, b.0), v))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).iter().map(|x| c * x).collect();
        self.push(Op::Scale(a.0, c), v)
    }

    /// Vector `a` times the scalar node `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        check_len("tape mul_scalar", 1, self.vlen(s))?;
        let c = self.scalar_value(s);
        let v = self.value(a).iter().map(|x| c * x).collect();
        Ok(self.push(Op::MulScalar(a.0, s.0), v))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().sum();
        self.push(Op::Sum(a.0), vec![v])
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        check_len("tape dot", self.vlen(a), self.vlen(b))?;
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        Ok(self.push(Op::Dot(a.0, b.0), vec![v]))
    }

    pub fn sq_norm(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x * x).sum();
        self.push(Op::SqNorm(a.0), vec![v])
    }

    /// `M v` for a row-major `rows × cols` matrix node.
    pub fn matvec(&mut self, m: Var, v: Var, rows: usize, cols: usize) -> Result<Var> {
        check_len("tape matvec (matrix)", rows * cols, self.vlen(m))?;
        check_len("tape matvec (vector)", cols, self.vlen(v))?;
        let (mv, vv) = (self.value(m), self.value(v));
        let out = (0..rows)
            .map(|i| mv[i * cols..(i + 1) * cols].iter().zip(vv).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Op::MatVec { m: m.0, v: v.0, rows, cols }, out))
    }

    /// `Mᵀ v` for a row-major `rows × cols` matrix node.
    pub fn matvec_t(&mut self, m: Var, v: Var, rows: usize, cols: usize) -> Result<Var> {
        check_len("tape matvec_t (matrix)", rows * cols, self.vlen(m))?;
        check_len("tape matvec_t (vector)", rows, self.vlen(v))?;
        let (mv, vv) = (self.value(m), self.value(v));
        let mut out = vec![0.0; cols];
        for i in 0..rows {
            let vi = vv[i];
            for (o, mij) in out.iter_mut().zip(&mv[i * cols..(i + 1) * cols]) {
                *o += mij * vi;
            }
        }
        Ok(self.push(Op::MatTVec { m: m.0, v: v.0, rows, cols }, out))
    }

    /// Row-major `a bᵀ`.
    pub fn outer(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = Vec::with_capacity(av.len() * bv.len());
        for x in av {
            out.extend(bv.iter().map(|y| x * y));
        }
        self.push(Op::Outer(a.0, b.0), out)
    }

    /// `W x + b` with `W` row-major `rows × cols`.
    pub fn affine(&mut self, w: Var, b: Var, x: Var, rows: usize, cols: usize) -> Result<Var> {
        check_len("tape affine (weights)", rows * cols, self.vlen(w))?;
        check_len("tape affine (bias)", rows, self.vlen(b))?;
        check_len("tape affine (input)", cols, self.vlen(x))?;
        let (wv, bv, xv) = (self.value(w), self.value(b), self.value(x));
        let out = (0..rows)
            .map(|i| bv[i] + wv[i * cols..(i + 1) * cols].iter().zip(xv).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        Ok(self.push(Op::Affine { w: w.0, b: b.0, x: x.0, rows, cols }, out))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.leaky_relu(a, 0.0)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).iter().map(|u| leaky(*u, slope)).collect();
        self.push(Op::LeakyRelu(a.0, slope), v)
    }

    /// Derivative of `leaky_relu(a, slope)` as a value; carries no gradient
    /// (the derivative is piecewise constant).
    pub fn activation_deriv(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).iter().map(|u| leaky_deriv(*u, slope)).collect();
        self.push(Op::ActivationDeriv, v)
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let v = softmax_values(self.value(a));
        self.push(Op::Softmax(a.0), v)
    }

    /// `Σ tᵢ · (−log softmax(z)ᵢ)`, differentiable in both logits and target.
    pub fn cross_entropy(&mut self, logits: Var, target: Var) -> Result<Var> {
        check_len("tape cross_entropy", self.vlen(logits), self.vlen(target))?;
        let z = self.value(logits);
        let t = self.value(target);
        let lse = log_sum_exp(z);
        let v = t.iter().zip(z).map(|(ti, zi)| ti * (lse - zi)).sum();
        Ok(self.push(Op::CrossEntropy(logits.0, target.0), vec![v]))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::new();
        for p in parts {
            out.extend_from_slice(self.value(*p));
        }
        self.push(Op::Concat(parts.iter().map(|p| p.0).collect()), out)
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        if start + len > self.vlen(a) {
            return Err(Error::DimMismatch {
                op: "tape slice",
                expected: start + len,
                got: self.vlen(a),
            });
        }
        let v = self.value(a)[start..start + len].to_vec();
        Ok(self.push(Op::Slice(a.0, start), v))
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_len = self.vlen(root);
        if root_len != 1 {
            return Err(Error::NonScalarRoot(root_len));
        }
        let lens: Vec<usize> = self.nodes.iter().map(|n| n.value.len()).collect();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(vec![1.0]);
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads, &lens);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads, lens })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>], lens: &[usize]) {
        fn buf<'a>(grads: &'a mut [Option<Vec<f64>>], lens: &[usize], j: usize) -> &'a mut Vec<f64> {
            grads[j].get_or_insert_with(|| vec![0.0; lens[j]])
        }
        let val = |j: usize| -> &[f64] { &self.nodes[j].value };
        match &self.nodes[i].op {
            Op::Leaf | Op::ActivationDeriv => {}
            Op::Add(a, b) => {
                for (o, gi) in buf(grads, lens, *a).iter_mut().zip(g) {
                    *o += gi;
                }
                for (o, gi) in buf(grads, lens, *b).iter_mut().zip(g) {
                    *o += gi;
                }
            }
            Op::Sub(a, b) => {
                for (o, gi) in buf(grads, lens, *a).iter_mut().zip(g) {
                    *o += gi;
                }
                for (o, gi) in buf(grads, lens, *b).iter_mut().zip(g) {
                    *o -= gi;
                }
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                let ga: Vec<f64> = g.iter().zip(val(b)).map(|(x, y)| x * y).collect();
                let gb: Vec<f64> = g.iter().zip(val(a)).map(|(x, y)| x * y).collect();
                for (o, v) in buf(grads, lens, a).iter_mut().zip(ga) {
                    *o += v;
                }
                for (o, v) in buf(grads, lens, b).iter_mut().zip(gb) {
                    *o += v;
                }
            }
            Op::Scale(a, c) => {
                for (o, gi) in buf(grads, lens, *a).iter_mut().zip(g) {
                    *o += c * gi;
                }
            }
            Op::MulScalar(a, s) => {
                let (a, s) = (*a, *s);
                let c = val(s)[0];
                let gs: f64 = g.iter().zip(val(a)).map(|(x, y)| x * y).sum();
                for (o, gi) in buf(grads, lens, a).iter_mut().zip(g) {
                    *o += c * gi;
                }
                buf(grads, lens, s)[0] += gs;
            }
            Op::Sum(a) => {
                for o in buf(grads, lens, *a).iter_mut() {
                    *o += g[0];
                }
            }
            Op::Dot(a, b) => {
                let (a, b) = (*a, *b);
                let ga: Vec<f64> = val(b).iter().map(|y| g[0] * y).collect();
                let gb: Vec<f64> = val(a).iter().map(|y| g[0] * y).collect();
                for (o, v) in buf(grads, lens, a).iter_mut().zip(ga) {
                    *o += v;
                }
                for (o, v) in buf(grads, lens, b).iter_mut().zip(gb) {
                    *o += v;
                }
            }
            Op::SqNorm(a) => {
                let ga: Vec<f64> = val(*a).iter().map(|y| 2.0 * g[0] * y).collect();
                for (o, v) in buf(grads, lens, *a).iter_mut().zip(ga) {
                    *o += v;
                }
            }
            Op::MatVec { m, v, rows, cols } | Op::Affine { w: m, x: v, rows, cols, .. } => {
                let (m, v, rows, cols) = (*m, *v, *rows, *cols);
                if let Op::Affine { b, .. } = &self.nodes[i].op {
                    for (o, gi) in buf(grads, lens, *b).iter_mut().zip(g) {
                        *o += gi;
                    }
                }
                let mut gv = vec![0.0; cols];
                {
                    let mv = val(m);
                    for r in 0..rows {
                        let gr = g[r];
                        if gr != 0.0 {
                            for (o, mij) in gv.iter_mut().zip(&mv[r * cols..(r + 1) * cols]) {
                                *o += gr * mij;
                            }
                        }
                    }
                }
                let vv = val(v).to_vec();
                let gm = buf(grads, lens, m);
                for r in 0..rows {
                    let gr = g[r];
                    if gr != 0.0 {
                        for (o, vj) in gm[r * cols..(r + 1) * cols].iter_mut().zip(&vv) {
                            *o += gr * vj;
                        }
                    }
                }
                for (o, x) in buf(grads, lens, v).iter_mut().zip(gv) {
                    *o += x;
                }
            }
            Op::MatTVec { m, v, rows, cols } => {
                let (m, v, rows, cols) = (*m, *v, *rows, *cols);
                let mv = val(m);
                let gv: Vec<f64> = (0..rows)
                    .map(|r| mv[r * cols..(r + 1) * cols].iter().zip(g).map(|(a, b)| a * b).sum())
                    .collect();
                let vv = val(v).to_vec();
                let gm = buf(grads, lens, m);
                for r in 0..rows {
                    let vr = vv[r];
                    if vr != 0.0 {
                        for (o, gj) in gm[r * cols..(r + 1) * cols].iter_mut().zip(g) {
                            *o += vr * gj;
                        }
                    }
                }
                for (o, x) in buf(grads, lens, v).iter_mut().zip(gv) {
                    *o += x;
                }
            }
            Op::Outer(a, b) => {
                let (a, b) = (*a, *b);
                let (av, bv) = (val(a).to_vec(), val(b).to_vec());
                let nb = bv.len();
                let ga: Vec<f64> = (0..av.len())
                    .map(|r| g[r * nb..(r + 1) * nb].iter().zip(&bv).map(|(x, y)| x * y).sum())
                    .collect();
                let mut gb = vec![0.0; nb];
                for (r, ar) in av.iter().enumerate() {
                    for (o, gj) in gb.iter_mut().zip(&g[r * nb..(r + 1) * nb]) {
                        *o += ar * gj;
                    }
                }
                for (o, x) in buf(grads, lens, a).iter_mut().zip(ga) {
                    *o += x;
                }
                for (o, x) in buf(grads, lens, b).iter_mut().zip(gb) {
                    *o += x;
                }
            }
            Op::LeakyRelu(a, slope) => {
                let (a, slope) = (*a, *slope);
                let d: Vec<f64> = val(a).iter().zip(g).map(|(u, gi)| leaky_deriv(*u, slope) * gi).collect();
                for (o, x) in buf(grads, lens, a).iter_mut().zip(d) {
                    *o += x;
                }
            }
            Op::Softmax(a) => {
                let y = val(i);
                let gy: f64 = g.iter().zip(y).map(|(x, z)| x * z).sum();
                let d: Vec<f64> = y.iter().zip(g).map(|(yi, gi)| yi * (gi - gy)).collect();
                for (o, x) in buf(grads, lens, *a).iter_mut().zip(d) {
                    *o += x;
                }
            }
            Op::CrossEntropy(z, t) => {
                let (z, t) = (*z, *t);
                let zv = val(z);
                let tv = val(t);
                let p = softmax_values(zv);
                let lse = log_sum_exp(zv);
                let st: f64 = tv.iter().sum();
                let gz: Vec<f64> = p.iter().zip(tv).map(|(pi, ti)| g[0] * (st * pi - ti)).collect();
                let gt: Vec<f64> = zv.iter().map(|zi| g[0] * (lse - zi)).collect();
                for (o, x) in buf(grads, lens, z).iter_mut().zip(gz) {
                    *o += x;
                }
                for (o, x) in buf(grads, lens, t).iter_mut().zip(gt) {
                    *o += x;
                }
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let n = lens[p];
                    for (o, gi) in buf(grads, lens, p).iter_mut().zip(&g[off..off + n]) {
                        *o += gi;
                    }
                    off += n;
                }
            }
            Op::Slice(a, start) => {
                let (a, start) = (*a, *start);
                for (o, gi) in buf(grads, lens, a)[start..start + g.len()].iter_mut().zip(g) {
                    *o += gi;
                }
            }
        }
    }
}
