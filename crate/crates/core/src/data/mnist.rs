use std::path::Path;

use super::{onehot, Example, LabelKind, Pool};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parse an IDX image file; returns `(rows, cols, pixels)` with one `rows·cols`
/// block per image.
pub fn read_idx_images(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let b = read(path)?;
    let what = path.display().to_string();
    if b.len() < 16 || be_u32(&b, 0) != IMAGE_MAGIC {
        return Err(Error::parse(what, "bad IDX image magic number"));
    }
    let (n, rows, cols) = (be_u32(&b, 4) as usize, be_u32(&b, 8) as usize, be_u32(&b, 12) as usize);
    if b.len() != 16 + n * rows * cols {
        return Err(Error::parse(what, format!("expected {} pixel bytes, found {}", n * rows * cols, b.len() - 16)));
    }
    Ok((rows, cols, b[16..].to_vec()))
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let b = read(path)?;
    let what = path.display().to_string();
    if b.len() < 8 || be_u32(&b, 0) != LABEL_MAGIC {
        return Err(Error::parse(what, "bad IDX label magic number"));
    }
    let n = be_u32(&b, 4) as usize;
    if b.len() != 8 + n {
        return Err(Error::parse(what, format!("expected {n} labels, found {}", b.len() - 8)));
    }
    Ok(b[8..].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Entries `N(0, 1/784)` drawn from the seed.
    Gaussian,
    /// Raw scaled pixels; requires `proj_dim == rows·cols`.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistOptions {
    /// Digits kept, in class order: `digits[c]` becomes class `c`.
    pub digits: Vec<u8>,
    pub proj_dim: usize,
    /// Seeded random subset size; `None` keeps every matching image.
    pub subset: Option<usize>,
    pub projection: Projection,
    pub seed: u64,
}

impl Default for MnistOptions {
    fn default() -> Self {
        Self { digits: vec![3, 5], proj_dim: 24, subset: Some(1000), projection: Projection::Gaussian, seed: 0 }
    }
}

/// Projection matrix `R ∈ ℝ^{pixels × proj_dim}`, row-major, entries `N(0, 1/pixels)`.
fn projection_matrix(pixels: usize, proj_dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    let sd = 1.0 / (pixels as f64).sqrt();
    rng.normal_vec(pixels * proj_dim, sd)
}

/// Load IDX images/labels, keep the requested digits, scale pixels to `[0,1]` and
/// project to `proj_dim` features with `x ↦ Rᵀx`.
pub fn load_mnist_projected(images: impl AsRef<Path>, labels: impl AsRef<Path>, opts: &MnistOptions) -> Result<Pool> {
    let (rows, cols, pixels) = read_idx_images(images.as_ref())?;
    let lab = read_idx_labels(labels.as_ref())?;
    let npix = rows * cols;
    let n = pixels.len() / npix.max(1);
    if n != lab.len() {
        return Err(Error::parse("mnist", format!("{n} images but {} labels", lab.len())));
    }
    if opts.digits.is_empty() {
        return Err(Error::InvalidArg("digit set must be nonempty".into()));
    }
    if opts.proj_dim == 0 || (opts.projection == Projection::Identity && opts.proj_dim != npix) {
        return Err(Error::InvalidArg(format!("projection dimension {} invalid", opts.proj_dim)));
    }
    let root = SeededRng::new(opts.seed);
    let mut idx: Vec<usize> = (0..n).filter(|&i| opts.digits.contains(&lab[i])).collect();
    if idx.is_empty() {
        return Err(Error::Empty("no images with the requested digits"));
    }
    if let Some(m) = opts.subset {
        root.child(1).shuffle(&mut idx);
        idx.truncate(m.min(idx.len()));
    }
    let proj = match opts.projection {
        Projection::Gaussian => Some(projection_matrix(npix, opts.proj_dim, &mut root.child(0))),
        Projection::Identity => None,
    };
    let k = opts.digits.len();
    let examples = idx
        .iter()
        .enumerate()
        .map(|(id, &i)| {
            let img: Vec<f64> = pixels[i * npix..(i + 1) * npix].iter().map(|p| *p as f64 / 255.0).collect();
            let x = match &proj {
                None => img,
                Some(r) => {
                    let mut f = vec![0.0; opts.proj_dim];
                    for (p, v) in img.iter().enumerate() {
                        if *v != 0.0 {
                            for (fj, rj) in f.iter_mut().zip(&r[p * opts.proj_dim..(p + 1) * opts.proj_dim]) {
                                *fj += v * rj;
                            }
                        }
                    }
                    f
                }
            };
            let class = opts.digits.iter().position(|d| *d == lab[i]).expect("filtered");
            Example { id, x, y: onehot(class, k) }
        })
        .collect();
    Pool::new(examples, LabelKind::Classes(k), opts.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn fixture() -> (PathBuf, PathBuf) {
        let d = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
        (d.join("mnist-3-5-images-idx3-ubyte"), d.join("mnist-3-5-labels-idx1-ubyte"))
    }

    #[test]
    fn identity_mode_gives_scaled_pixels() {
        let (i, l) = fixture();
        let opts = MnistOptions { proj_dim: 784, projection: Projection::Identity, subset: Some(5), ..Default::default() };
        let p = load_mnist_projected(&i, &l, &opts).unwrap();
        let (_, _, px) = read_idx_images(&i).unwrap();
        let labels = read_idx_labels(&l).unwrap();
        assert_eq!(p.dim(), 784);
        // Each projected example equals some scaled image of the right digit.
        for e in p.examples() {
            let found = (0..labels.len()).any(|j| {
                px[j * 784..(j + 1) * 784].iter().zip(&e.x).all(|(a, b)| *a as f64 / 255.0 == *b)
            });
            assert!(found);
            assert!(e.x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn same_seed_same_features() {
        let (i, l) = fixture();
        let opts = MnistOptions { subset: Some(50), ..Default::default() };
        assert_eq!(load_mnist_projected(&i, &l, &opts).unwrap(), load_mnist_projected(&i, &l, &opts).unwrap());
    }

    #[test]
    fn projected_variance_follows_scaling_rule() {
        let (i, l) = fixture();
        let (_, _, px) = read_idx_images(&i).unwrap();
        let img: Vec<f64> = px[..784].iter().map(|p| *p as f64 / 255.0).collect();
        let predicted = img.iter().map(|v| v * v).sum::<f64>() / 784.0;
        let mut samples = Vec::new();
        for seed in 0..50 {
            let r = projection_matrix(784, 24, &mut SeededRng::new(seed));
            for j in 0..24 {
                samples.push((0..784).map(|p| img[p] * r[p * 24 + j]).sum::<f64>());
            }
        }
        let n = samples.len() as f64;
        let var = samples.iter().map(|s| s * s).sum::<f64>() / n;
        let se = predicted * (2.0 / n).sqrt();
        assert!((var - predicted).abs() < 3.0 * se, "var {var} predicted {predicted}");
        let _ = l;
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad");
        std::fs::write(&p, [0u8, 0, 8, 1, 0, 0, 0, 2, 7]).unwrap();
        assert!(read_idx_labels(&p).is_err());
        assert!(read_idx_images(&p).is_err());
        let (i, _) = fixture();
        assert!(matches!(load_mnist_projected(&i, &p, &MnistOptions::default()), Err(Error::Parse { .. })));
    }
}
