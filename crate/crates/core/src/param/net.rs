//! Teacher network, Adam and the checkpoint format.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::learners::Activation;
use crate::numerics::{softmax, SeededRng, Tape, Var};

/// How raw network outputs become a label (or action distribution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    /// Raw outputs used as the label (scalar-label learners).
    Raw,
    /// Softmax onto the simplex.
    Softmax,
    /// `α·ỹ + (1−α)·softmax(raw)`.
    Residual { alpha: f64 },
    /// Logits of a discrete policy (label vectors or μ values).
    Logits,
}

/// Fully connected feed-forward teacher. Each layer stores a row-major
/// `out × in` weight block followed by its bias, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherNet {
    sizes: Vec<usize>,
    activation: Activation,
    head: Head,
    params: Vec<f64>,
    /// Fixed input standardization `(x − shift) ⊙ scale`; identity when absent.
    standardize: Option<(Vec<f64>, Vec<f64>)>,
}

/// Tape leaves of one layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub w: Var,
    pub b: Var,
}

fn act(u: f64, a: Activation) -> f64 {
    if u > 0.0 {
        u
    } else {
        a.slope() * u
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
}

fn validate_head(head: Head, out: usize) -> Result<()> {
    match head {
        Head::Residual { alpha } if !(0.0..=1.0).contains(&alpha) => Err(Error::InvalidArg(format!("residual alpha must lie in [0,1], got {alpha}"))),
        Head::Softmax | Head::Residual { .. } if out < 2 => Err(Error::InvalidArg("softmax-type heads need at least 2 outputs".into())),
        _ => Ok(()),
    }
}

impl TeacherNet {
    /// `sizes = [input, hidden…, output]`. Hidden weights use He-scaled
    /// Gaussians; the output layer starts small so the head begins near uniform.
    pub fn new(sizes: &[usize], activation: Activation, head: Head, rng: &mut SeededRng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArg(format!("bad teacher layer sizes {sizes:?}")));
        }
        validate_head(head, *sizes.last().unwrap())?;
        let mut params = Vec::with_capacity(param_count(sizes));
        let layers = sizes.len() - 1;
        for (l, p) in sizes.windows(2).enumerate() {
            let sd = if l + 1 == layers { 0.1 / (p[0] as f64).sqrt() } else { (2.0 / p[0] as f64).sqrt() };
            params.extend(rng.normal_vec(p[0] * p[1], sd));
            params.extend(std::iter::repeat_n(0.0, p[1]));
        }
        Ok(Self { sizes: sizes.to_vec(), activation, head, params, standardize: None })
    }

    pub fn from_params(sizes: &[usize], activation: Activation, head: Head, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArg(format!("bad teacher layer sizes {sizes:?}")));
        }
        validate_head(head, *sizes.last().unwrap())?;
        check_len("teacher params", param_count(sizes), params.len())?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("teacher parameters".into()));
        }
        Ok(Self { sizes: sizes.to_vec(), activation, head, params, standardize: None })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn set_head(&mut self, head: Head) -> Result<()> {
        validate_head(head, self.output_len())?;
        self.head = head;
        Ok(())
    }

    pub fn standardization(&self) -> Option<(&[f64], &[f64])> {
        self.standardize.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn set_standardization(&mut self, shift: Vec<f64>, scale: Vec<f64>) -> Result<()> {
        check_len("standardization shift", self.input_len(), shift.len())?;
        check_len("standardization scale", self.input_len(), scale.len())?;
        if shift.iter().chain(&scale).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("standardization".into()));
        }
        self.standardize = Some((shift, scale));
        Ok(())
    }

    /// Per-feature mean and inverse standard deviation of sample inputs.
    /// Features that do not vary are only centered.
    pub fn fit_standardization(&mut self, samples: &[Vec<f64>]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::Empty("standardization samples"));
        }
        let n = samples.len() as f64;
        let d = self.input_len();
        let mut mean = vec![0.0; d];
        for s in samples {
            check_len("standardization sample", d, s.len())?;
            mean.iter_mut().zip(s).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; d];
        for s in samples {
            var.iter_mut().zip(s).zip(&mean).for_each(|((a, v), m)| *a += (v - m).powi(2) / n);
        }
        let scale = var.iter().zip(&mean).map(|(v, m)| if v.sqrt() > 1e-8 * (1.0 + m.abs()) { 1.0 / v.sqrt() } else { 1.0 }).collect();
        self.set_standardization(mean, scale)
    }

    fn standardized(&self, input: &[f64]) -> Vec<f64> {
        match &self.standardize {
            None => input.to_vec(),
            Some((shift, scale)) => input.iter().zip(shift).zip(scale).map(|((x, a), b)| (x - a) * b).collect(),
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Raw outputs of the network.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("teacher input", self.input_len(), input.len())?;
        let mut h = self.standardized(input);
        let layers = self.sizes.len() - 1;
        let mut off = 0;
        for (l, p) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (p[0], p[1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let mut next: Vec<f64> = (0..n_out)
                .map(|i| b[i] + w[i * n_in..(i + 1) * n_in].iter().zip(&h).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            if l + 1 < layers {
                next.iter_mut().for_each(|u| *u = act(*u, self.activation));
            }
            h = next;
        }
        Ok(h)
    }

    /// Applies the head. `y_true` is only read by the residual head.
    pub fn label(&self, input: &[f64], y_true: &[f64]) -> Result<Vec<f64>> {
        let raw = self.forward(input)?;
        match self.head {
            Head::Raw => Ok(raw),
            Head::Softmax | Head::Logits => Ok(softmax(&raw)),
            Head::Residual { alpha } => {
                check_len("residual head label", raw.len(), y_true.len())?;
                let s = softmax(&raw);
                Ok(y_true.iter().zip(&s).map(|(t, si)| alpha * t + (1.0 - alpha) * si).collect())
            }
        }
    }

    /// One leaf pair per layer, in parameter order.
    pub fn tape_params(&self, tape: &mut Tape) -> Vec<LayerVars> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|p| {
                let nw = p[0] * p[1];
                let w = tape.leaf(self.params[off..off + nw].to_vec());
                let b = tape.leaf(self.params[off + nw..off + nw + p[1]].to_vec());
                off += nw + p[1];
                LayerVars { w, b }
            })
            .collect()
    }

    pub fn forward_tape(&self, tape: &mut Tape, layers: &[LayerVars], input: Var) -> Result<Var> {
        let mut h = input;
        if let Some((shift, scale)) = &self.standardize {
            let a = tape.constant(shift);
            let b = tape.constant(scale);
            h = tape.sub(h, a)?;
            h = tape.mul(h, b)?;
        }
        let n = layers.len();
        for (l, (lv, p)) in layers.iter().zip(self.sizes.windows(2)).enumerate() {
            h = tape.affine(lv.w, lv.b, h, p[1], p[0])?;
            if l + 1 < n {
                h = tape.leaky_relu(h, self.activation.slope());
            }
        }
        Ok(h)
    }

    /// Head applied on the tape; mirrors [`TeacherNet::label`].
    pub fn label_tape(&self, tape: &mut Tape, layers: &[LayerVars], input: Var, y_true: &[f64]) -> Result<Var> {
        let raw = self.forward_tape(tape, layers, input)?;
        Ok(match self.head {
            Head::Raw => raw,
            Head::Softmax | Head::Logits => tape.softmax(raw),
            Head::Residual { alpha } => {
                let t = tape.constant(y_true);
                let t = tape.scale(t, alpha);
                let s = tape.softmax(raw);
                let s = tape.scale(s, 1.0 - alpha);
                tape.add(t, s)?
            }
        })
    }

    /// Flat parameter gradient gathered from the layer leaves.
    pub fn gather_grad(&self, grads: &crate::numerics::Gradients, layers: &[LayerVars]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params.len());
        for lv in layers {
            out.extend(grads.wrt(lv.w));
            out.extend(grads.wrt(lv.b));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize, cfg: AdamConfig) -> Result<Self> {
        if !(cfg.lr > 0.0) || !(0.0..1.0).contains(&cfg.beta1) || !(0.0..1.0).contains(&cfg.beta2) || !(cfg.eps > 0.0) || !(cfg.weight_decay >= 0.0) {
            return Err(Error::InvalidArg(format!("bad Adam settings {cfg:?}")));
        }
        Ok(Self { cfg, m: vec![0.0; n], v: vec![0.0; n], t: 0 })
    }
}

/// Bias-corrected Adam update with decoupled weight decay, in place.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut AdamState) -> Result<()> {
    check_len("adam theta", state.m.len(), theta.len())?;
    check_len("adam grad", theta.len(), grad.len())?;
    let c = state.cfg;
    state.t += 1;
    let bc1 = 1.0 - c.beta1.powi(state.t as i32);
    let bc2 = 1.0 - c.beta2.powi(state.t as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        let mh = state.m[i] / bc1;
        let vh = state.v[i] / bc2;
        theta[i] -= c.lr * (mh / (vh.sqrt() + c.eps) + c.weight_decay * theta[i]);
    }
    Ok(())
}

const MAGIC: &[u8; 4] = b"LSTN";
const VERSION: u32 = 2;

/// Checkpoint layout (little endian): magic `LSTN`, version u32, head tag u8 +
/// alpha f64, activation slope f64, layer count u32, sizes u32…, params f64…,
/// standardization flag u8 and, when set, shift f64… and scale f64…,
/// Adam flag u8 and, when set, t u64, lr/β₁/β₂/ε/decay f64, m f64…, v f64….
pub fn write_checkpoint(w: &mut impl Write, net: &TeacherNet, adam: Option<&AdamState>) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let (tag, alpha) = match net.head {
        Head::Raw => (0u8, 0.0),
        Head::Softmax => (1, 0.0),
        Head::Residual { alpha } => (2, alpha),
        Head::Logits => (3, 0.0),
    };
    w.write_all(&[tag])?;
    w.write_all(&alpha.to_le_bytes())?;
    w.write_all(&net.activation.slope().to_le_bytes())?;
    w.write_all(&(net.sizes.len() as u32).to_le_bytes())?;
    for s in &net.sizes {
        w.write_all(&(*s as u32).to_le_bytes())?;
    }
    for p in &net.params {
        w.write_all(&p.to_le_bytes())?;
    }
    match &net.standardize {
        None => w.write_all(&[0])?,
        Some((a, b)) => {
            w.write_all(&[1])?;
            for v in a.iter().chain(b) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    match adam {
        None => w.write_all(&[0]),
        Some(a) => {
            w.write_all(&[1])?;
            w.write_all(&a.t.to_le_bytes())?;
            for v in [a.cfg.lr, a.cfg.beta1, a.cfg.beta2, a.cfg.eps, a.cfg.weight_decay].iter().chain(&a.m).chain(&a.v) {
                w.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        }
    }
}

fn rd<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn rd_f64(r: &mut impl Read) -> std::io::Result<f64> {
    Ok(f64::from_le_bytes(rd::<8>(r)?))
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<(TeacherNet, Option<AdamState>)> {
    let bad = |m: &str| Error::parse("teacher checkpoint", m);
    let io = |e: std::io::Error| bad(&e.to_string());
    if &rd::<4>(r).map_err(io)? != MAGIC {
        return Err(bad("missing LSTN magic"));
    }
    let version = u32::from_le_bytes(rd::<4>(r).map_err(io)?);
    if version != 1 && version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let tag = rd::<1>(r).map_err(io)?[0];
    let alpha = rd_f64(r).map_err(io)?;
    let head = match tag {
        0 => Head::Raw,
        1 => Head::Softmax,
        2 => Head::Residual { alpha },
        3 => Head::Logits,
        t => return Err(bad(&format!("unknown head tag {t}"))),
    };
    let slope = rd_f64(r).map_err(io)?;
    let activation = if slope == 0.0 { Activation::Relu } else { Activation::LeakyRelu(slope) };
    let n = u32::from_le_bytes(rd::<4>(r).map_err(io)?) as usize;
    if n > 64 {
        return Err(bad("implausible layer count"));
    }
    let sizes = (0..n).map(|_| rd::<4>(r).map(|b| u32::from_le_bytes(b) as usize)).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
    let np = param_count(&sizes);
    let params = (0..np).map(|_| rd_f64(r)).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
    let mut net = TeacherNet::from_params(&sizes, activation, head, params)?;
    // Version 1 files predate input standardization.
    if version >= 2 {
        match rd::<1>(r).map_err(io)?[0] {
            0 => {}
            1 => {
                let d = net.input_len();
                let v = (0..2 * d).map(|_| rd_f64(r)).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
                net.set_standardization(v[..d].to_vec(), v[d..].to_vec())?;
            }
            f => return Err(bad(&format!("bad standardization flag {f}"))),
        }
    }
    let adam = match rd::<1>(r).map_err(io)?[0] {
        0 => None,
        1 => {
            let t = u64::from_le_bytes(rd::<8>(r).map_err(io)?);
            let c: Vec<f64> = (0..5).map(|_| rd_f64(r)).collect::<std::io::Result<_>>().map_err(io)?;
            let cfg = AdamConfig { lr: c[0], beta1: c[1], beta2: c[2], eps: c[3], weight_decay: c[4] };
            let mut st = AdamState::new(np, cfg)?;
            st.t = t;
            for buf in [&mut st.m, &mut st.v] {
                for v in buf.iter_mut() {
                    *v = rd_f64(r).map_err(io)?;
                }
            }
            Some(st)
        }
        f => return Err(bad(&format!("bad optimizer flag {f}"))),
    };
    Ok((net, adam))
}

pub fn save_checkpoint(path: impl AsRef<Path>, net: &TeacherNet, adam: Option<&AdamState>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(&mut w, net, adam).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(TeacherNet, Option<AdamState>)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut std::io::BufReader::new(f))
}
