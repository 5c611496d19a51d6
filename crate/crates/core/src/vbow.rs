//! Visual bag of words: texton dictionaries and histogram-plus-entropy features.
//!
//! An image is summarized by sampling small patches, matching each patch to
//! its nearest texton (separately for intensity and gradient cues), and
//! normalizing the joint occurrence histogram. The normalized Shannon entropy
//! of that histogram is appended as one extra feature component.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Default patch edge length in pixels.
pub const DEFAULT_PATCH_SIZE: usize = 5;
/// Default number of textons per cue family.
pub const DEFAULT_TEXTONS_PER_FAMILY: usize = 10;
/// Default number of patch samples per image.
pub const DEFAULT_SAMPLES_PER_IMAGE: usize = 500;
/// Default number of Kohonen presentations.
pub const DEFAULT_KOHONEN_PRESENTATIONS: usize = 50_000;

/// Gradient magnitudes are divided by this to land in `[0, 1]`.
///
/// One-sided border differences reach 1 per axis, so the magnitude
/// never exceeds sqrt(2).
const GRADIENT_DIVISOR: f64 = std::f64::consts::SQRT_2;

/// Kohonen learning rate decays linearly over the presentation schedule.
const KOHONEN_ALPHA_START: f64 = 0.1;
const KOHONEN_ALPHA_END: f64 = 0.01;

/// Square patch of intensities (or gradient magnitudes) in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub w: usize,
    pub h: usize,
    pub values: Vec<f64>,
}

impl Patch {
    fn squared_distance(&self, other: &Patch) -> Result<f64> {
        if self.w != other.w || self.h != other.h {
            return Err(Error::ShapeMismatch(self.w, self.h, other.w, other.h));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

/// Trained texton dictionary: `n` intensity centroids and `n` gradient centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct TextonDictionary {
    intensity: Vec<Patch>,
    gradient: Vec<Patch>,
}

impl TextonDictionary {
    pub fn textons_per_family(&self) -> usize {
        self.intensity.len()
    }

    pub fn patch_size(&self) -> usize {
        self.intensity[0].w
    }

    pub fn intensity_textons(&self) -> &[Patch] {
        &self.intensity
    }

    pub fn gradient_textons(&self) -> &[Patch] {
        &self.gradient
    }

    /// Length of the feature vector produced against this dictionary.
    pub fn feature_len(&self) -> usize {
        2 * self.intensity.len() + 1
    }

    /// Serializes to a JSON file; f64 round-trip is bit-exact.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = DictionaryFile {
            n: self.intensity.len(),
            w: self.intensity[0].w,
            h: self.intensity[0].h,
            intensity: self.intensity.iter().map(|p| p.values.clone()).collect(),
            gradient: self.gradient.iter().map(|p| p.values.clone()).collect(),
        };
        fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: DictionaryFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        let to_patches = |rows: Vec<Vec<f64>>| -> Result<Vec<Patch>> {
            rows.into_iter()
                .map(|values| {
                    if values.len() != file.w * file.h {
                        return Err(Error::InvalidArgument(format!(
                            "centroid length {} does not match {}x{} header",
                            values.len(),
                            file.w,
                            file.h
                        )));
                    }
                    Ok(Patch {
                        w: file.w,
                        h: file.h,
                        values,
                    })
                })
                .collect()
        };
        let intensity = to_patches(file.intensity)?;
        let gradient = to_patches(file.gradient)?;
        if intensity.len() != file.n || gradient.len() != file.n || file.n == 0 {
            return Err(Error::InvalidArgument(
                "centroid count does not match header n".into(),
            ));
        }
        Ok(Self {
            intensity,
            gradient,
        })
    }
}

/// On-disk layout: centroid arrays behind an `{n, w, h}` header.
#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    n: usize,
    w: usize,
    h: usize,
    intensity: Vec<Vec<f64>>,
    gradient: Vec<Vec<f64>>,
}

/// Normalized texton histogram (intensity bins then gradient bins) plus entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub histogram: Vec<f64>,
    pub entropy: f64,
}

impl FeatureVector {
    /// Number of components treated as one flat vector (2n + 1).
    pub fn len(&self) -> usize {
        self.histogram.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat view used by Euclidean distances: histogram bins then entropy.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.histogram.clone();
        v.push(self.entropy);
        v
    }

    /// Squared Euclidean distance over the flat (2n + 1)-vector.
    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.histogram.iter().zip(&other.histogram) {
            acc += (a - b) * (a - b);
        }
        let de = self.entropy - other.entropy;
        acc + de * de
    }
}

/// Per-pixel gradient magnitude via central differences, one-sided at borders,
/// rescaled to `[0, 1]` by the maximum theoretical magnitude.
pub fn gradient_image(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let mut out = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let gx = if w == 1 {
                0.0
            } else if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                (img.get(x + 1, y) - img.get(x - 1, y)) / 2.0
            };
            let gy = if h == 1 {
                0.0
            } else if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                (img.get(x, y + 1) - img.get(x, y - 1)) / 2.0
            };
            out.set(x, y, (gx * gx + gy * gy).sqrt() / GRADIENT_DIVISOR);
        }
    }
    out
}

/// Draws `m` top-left patch positions uniformly; shared by extraction and
/// histogram building so both consume the rng identically.
fn sample_positions<R: Rng>(
    img: &Image,
    size: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if size == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "patch size and sample count must be positive".into(),
        ));
    }
    if img.width() < size || img.height() < size {
        return Err(Error::ImageTooSmall(
            img.width(),
            img.height(),
            size,
            size,
        ));
    }
    let max_x = img.width() - size;
    let max_y = img.height() - size;
    Ok((0..m)
        .map(|_| {
            let x = rng.random_range(0..=max_x);
            let y = rng.random_range(0..=max_y);
            (x, y)
        })
        .collect())
}

fn patch_at(img: &Image, x: usize, y: usize, size: usize) -> Patch {
    let mut values = Vec::with_capacity(size * size);
    for dy in 0..size {
        for dx in 0..size {
            values.push(img.get(x + dx, y + dy));
        }
    }
    Patch {
        w: size,
        h: size,
        values,
    }
}

/// Extracts `m` patches at uniformly random positions; deterministic per seed.
pub fn extract_patches<R: Rng>(
    img: &Image,
    size: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Patch>> {
    let positions = sample_positions(img, size, m, rng)?;
    Ok(positions
        .into_iter()
        .map(|(x, y)| patch_at(img, x, y, size))
        .collect())
}

/// Index of the centroid at minimum Euclidean distance; ties break low.
pub fn nearest_texton(patch: &Patch, centroids: &[Patch]) -> Result<usize> {
    if centroids.is_empty() {
        return Err(Error::InvalidArgument("empty centroid list".into()));
    }
    let mut best = 0usize;
    let mut best_d = patch.squared_distance(&centroids[0])?;
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = patch.squared_distance(c)?;
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(best)
}

/// Winner-take-all Kohonen pass over one centroid family. `sample(i)` yields
/// the i-th presentation; the first `n` seed the centroids.
fn kohonen_family(sample: impl Fn(usize) -> Patch, n: usize, presentations: usize) -> Vec<Patch> {
    let mut centroids: Vec<Patch> = (0..n).map(&sample).collect();
    for step in 0..presentations {
        let alpha = if presentations <= 1 {
            KOHONEN_ALPHA_START
        } else {
            let frac = step as f64 / (presentations - 1) as f64;
            KOHONEN_ALPHA_START + (KOHONEN_ALPHA_END - KOHONEN_ALPHA_START) * frac
        };
        let p = sample(n + step);
        let winner = nearest_texton(&p, &centroids).expect("same shape by construction");
        for (c, s) in centroids[winner].values.iter_mut().zip(&p.values) {
            *c += alpha * (s - *c);
        }
    }
    centroids
}

/// Trains intensity and gradient textons with winner-take-all Kohonen
/// clustering. Each presentation draws one location and feeds the intensity
/// patch to the intensity family and the co-located gradient patch to the
/// gradient family.
pub fn train_dictionary<R: Rng>(
    images: &[Image],
    n: usize,
    size: usize,
    presentations: usize,
    rng: &mut R,
) -> Result<TextonDictionary> {
    if images.is_empty() {
        return Err(Error::InvalidArgument("no training images".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one texton".into()));
    }
    for img in images {
        if img.width() < size || img.height() < size {
            return Err(Error::ImageTooSmall(img.width(), img.height(), size, size));
        }
    }
    let gradients: Vec<Image> = images.iter().map(gradient_image).collect();

    // One pre-drawn location stream drives both families; each presentation
    // feeds the intensity patch and the co-located gradient patch.
    let locations: Vec<(usize, usize, usize)> = (0..n + presentations)
        .map(|_| {
            let idx = rng.random_range(0..images.len());
            let img = &images[idx];
            let x = rng.random_range(0..=img.width() - size);
            let y = rng.random_range(0..=img.height() - size);
            (idx, x, y)
        })
        .collect();

    let intensity = kohonen_family(
        |i| {
            let (idx, x, y) = locations[i];
            patch_at(&images[idx], x, y, size)
        },
        n,
        presentations,
    );
    let gradient = kohonen_family(
        |i| {
            let (idx, x, y) = locations[i];
            patch_at(&gradients[idx], x, y, size)
        },
        n,
        presentations,
    );
    Ok(TextonDictionary {
        intensity,
        gradient,
    })
}

/// Normalized Shannon entropy of a frequency histogram:
/// `-sum p log2 p / log2(len)`, with `0 log 0 := 0`.
pub fn shannon_entropy(hist: &[f64]) -> Result<f64> {
    for (i, &p) in hist.iter().enumerate() {
        if p < 0.0 {
            return Err(Error::NegativeBin(i, p));
        }
    }
    if hist.len() <= 1 {
        return Ok(0.0);
    }
    let raw: f64 = hist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    Ok(raw / (hist.len() as f64).log2())
}

/// Builds the texton occurrence histogram plus entropy for one image.
///
/// Each of the `m` sampled locations contributes one count to the intensity
/// half and one count to the gradient half; all `2n` bins are normalized
/// jointly to sum to 1.
pub fn texton_histogram<R: Rng>(
    img: &Image,
    dict: &TextonDictionary,
    m: usize,
    rng: &mut R,
) -> Result<FeatureVector> {
    let n = dict.intensity.len();
    let size = dict.patch_size();
    let positions = sample_positions(img, size, m, rng)?;
    let grad = gradient_image(img);

    let mut counts = vec![0u32; 2 * n];
    for (x, y) in positions {
        let ip = patch_at(img, x, y, size);
        let gp = patch_at(&grad, x, y, size);
        counts[nearest_texton(&ip, &dict.intensity)?] += 1;
        counts[n + nearest_texton(&gp, &dict.gradient)?] += 1;
    }
    let total = (2 * m) as f64;
    let histogram: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let entropy = shannon_entropy(&histogram)?;
    Ok(FeatureVector { histogram, entropy })
}
