//! Feature extraction from grayscale images: resize-and-flatten for disc
//! images, and bag-of-words patch histograms for lens images.

use ndarray::{Array1, Array2, ArrayView2};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::FeatureVector;
use crate::error::{Result, SrclError};

pub const DEFAULT_SIDE: usize = 50;
pub const DEFAULT_PATCH_SIZE: usize = 3;
pub const DEFAULT_BINS: usize = 100;
const MAX_LLOYD_ITERATIONS: usize = 300;

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pixels: Array2<f64>,
}

impl GrayImage {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h < 3 || w < 3 {
            return Err(SrclError::InvalidImage(format!(
                "image must be at least 3x3, got {h}x{w}"
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SrclError::InvalidImage(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> ArrayView2<'_, f64> {
        self.pixels.view()
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }
}

/// Bilinear resize to `side × side` (pixel-centre alignment, edge clamp),
/// flattened row-major.
pub fn resize_flatten(img: &GrayImage, side: usize) -> Result<FeatureVector> {
    if side == 0 {
        return Err(SrclError::InvalidImage("target side must be positive".into()));
    }
    let src = img.pixels();
    let (h, w) = src.dim();
    let sy = h as f64 / side as f64;
    let sx = w as f64 / side as f64;
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        let (r0, r1, fy) = sample_position(r, sy, h);
        for c in 0..side {
            let (c0, c1, fx) = sample_position(c, sx, w);
            let top = src[(r0, c0)] * (1.0 - fx) + src[(r0, c1)] * fx;
            let bottom = src[(r1, c0)] * (1.0 - fx) + src[(r1, c1)] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    FeatureVector::from_vec(out)
}

fn sample_position(dst: usize, scale: f64, len: usize) -> (usize, usize, f64) {
    let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(len - 1);
    (lo, hi, pos - lo as f64)
}

/// Stride between neighbouring half-overlapping patches of side `s`.
pub fn patch_stride(s: usize) -> usize {
    s.div_ceil(2)
}

/// Closed-form patch count for an `h × w` image.
pub fn patch_count(h: usize, w: usize, s: usize) -> usize {
    if s == 0 || h < s || w < s {
        return 0;
    }
    let stride = patch_stride(s);
    ((h - s) / stride + 1) * ((w - s) / stride + 1)
}

/// Half-overlapping `s × s` patches on a regular grid, each flattened
/// row-major, in raster order.
pub fn extract_patches(img: &GrayImage, s: usize) -> Result<Vec<Vec<f64>>> {
    let (h, w) = (img.height(), img.width());
    if s == 0 || h < s || w < s {
        return Err(SrclError::ImageSmallerThanPatch {
            height: h,
            width: w,
            patch: s,
        });
    }
    let stride = patch_stride(s);
    let px = img.pixels();
    let mut patches = Vec::with_capacity(patch_count(h, w, s));
    for top in (0..=h - s).step_by(stride) {
        for left in (0..=w - s).step_by(stride) {
            let mut p = Vec::with_capacity(s * s);
            for r in top..top + s {
                for c in left..left + s {
                    p.push(px[(r, c)]);
                }
            }
            patches.push(p);
        }
    }
    Ok(patches)
}

/// k-means centroids over flattened patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub patch_size: usize,
    pub centroids: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn new(patch_size: usize, centroids: Vec<Vec<f64>>) -> Result<Self> {
        if centroids.len() < 2 {
            return Err(SrclError::TooFewPatches {
                needed: 2,
                found: centroids.len(),
            });
        }
        if centroids.iter().any(|c| c.len() != patch_size * patch_size) {
            return Err(SrclError::InvalidImage(
                "centroid length does not match patch size".into(),
            ));
        }
        Ok(Self {
            patch_size,
            centroids,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Nearest centroid by Euclidean distance; ties go to the lowest index.
    pub fn nearest(&self, patch: &[f64]) -> usize {
        nearest(&self.centroids, patch).0
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing (at most 300 rounds). Deterministic for a fixed seed.
pub fn build_codebook(patches: &[Vec<f64>], k: usize, seed: u64) -> Result<Codebook> {
    if k < 2 || patches.len() < k {
        return Err(SrclError::TooFewPatches {
            needed: k.max(2),
            found: patches.len(),
        });
    }
    let dim = patches[0].len();
    let patch_size = (dim as f64).sqrt().round() as usize;
    if patch_size * patch_size != dim || patches.iter().any(|p| p.len() != dim) {
        return Err(SrclError::InvalidImage(
            "patches must share one square length".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(patches[rng.random_range(0..patches.len())].clone());
    let mut d2: Vec<f64> = patches.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let distinct_left = d2.iter().filter(|&&d| d > 0.0).count();
        if distinct_left == 0 {
            return Err(SrclError::TooFewPatches {
                needed: k,
                found: centroids.len(),
            });
        }
        let pick = WeightedIndex::new(&d2).expect("positive total weight").sample(&mut rng);
        let chosen = patches[pick].clone();
        for (d, p) in d2.iter_mut().zip(patches) {
            *d = d.min(sq_dist(p, &chosen));
        }
        centroids.push(chosen);
    }

    let mut assignment: Vec<usize> = patches.iter().map(|p| nearest(&centroids, p).0).collect();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in patches.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let next: Vec<usize> = patches.iter().map(|p| nearest(&centroids, p).0).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Codebook::new(patch_size, centroids)
}

/// L1-normalised histogram of nearest-centroid assignments.
pub fn bow_histogram(img: &GrayImage, codebook: &Codebook) -> Result<FeatureVector> {
    let patches = extract_patches(img, codebook.patch_size)?;
    let mut counts = Array1::<f64>::zeros(codebook.k());
    for p in &patches {
        counts[codebook.nearest(p)] += 1.0;
    }
    let total = patches.len() as f64;
    FeatureVector::new(counts / total)
}

/// Concatenates per-region histograms, each region with its own codebook.
pub fn bow_regions(regions: &[(&GrayImage, &Codebook)]) -> Result<FeatureVector> {
    let mut values = Vec::new();
    for (img, cb) in regions {
        values.extend(bow_histogram(img, cb)?.values().iter().copied());
    }
    FeatureVector::from_vec(values)
}

/// Draws up to `limit` patches uniformly without replacement.
pub fn sample_patches(patches: Vec<Vec<f64>>, limit: usize, seed: u64) -> Vec<Vec<f64>> {
    if patches.len() <= limit {
        return patches;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rand::seq::index::sample(&mut rng, patches.len(), limit);
    let mut idx: Vec<usize> = idx.into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| patches[i].clone()).collect()
}
