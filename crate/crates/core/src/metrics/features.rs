//! Hand-crafted texture descriptors and the feature-file format.
//!
//! Vector layout (16 values):
//!
//! | index | value |
//! |-------|-------|
//! | 0–4   | mean, std, skewness, kurtosis, entropy (256 bins, bits) |
//! | 5–7   | first, second, third quartile |
//! | 8–11  | GLCM contrast, homogeneity, energy, correlation at offset (1, 0) |
//! | 12–15 | the same at offset (0, 1) |
//!
//! The gray-level co-occurrence matrices use 32 levels, are symmetric and
//! normalized; energy is the angular second moment Σ p².

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::histogram::shannon_entropy;
use crate::{Error, Micrograph, Result};

pub const FEATURE_NAMES: [&str; 16] = [
    "mean",
    "std",
    "skewness",
    "kurtosis",
    "entropy",
    "q1",
    "median",
    "q3",
    "contrast_x",
    "homogeneity_x",
    "energy_x",
    "correlation_x",
    "contrast_y",
    "homogeneity_y",
    "energy_y",
    "correlation_y",
];

const GLCM_LEVELS: usize = 32;
const MIN_SIDE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub tag: String,
    pub values: Vec<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn glcm_features(levels: &[usize], w: usize, h: usize, dx: usize, dy: usize) -> [f64; 4] {
    let n = GLCM_LEVELS;
    let mut m = vec![0.0f64; n * n];
    let mut total = 0.0;
    for y in 0..h - dy {
        for x in 0..w - dx {
            let a = levels[y * w + x];
            let b = levels[(y + dy) * w + x + dx];
            m[a * n + b] += 1.0;
            m[b * n + a] += 1.0;
            total += 2.0;
        }
    }
    m.iter_mut().for_each(|v| *v /= total);
    let (mut contrast, mut homogeneity, mut energy, mut mu) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = m[i * n + j];
            let d = i as f64 - j as f64;
            contrast += d * d * p;
            homogeneity += p / (1.0 + d * d);
            energy += p * p;
            mu += i as f64 * p;
        }
    }
    // symmetric matrix: row and column marginals coincide
    let mut var = 0.0;
    let mut cov = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = m[i * n + j];
            var += (i as f64 - mu).powi(2) * p;
            cov += (i as f64 - mu) * (j as f64 - mu) * p;
        }
    }
    let correlation = if var > 1e-12 { cov / var } else { 0.0 };
    [contrast, homogeneity, energy, correlation]
}

/// Computes the 16-value descriptor of an image (at least 32x32).
pub fn texture_features(img: &Micrograph) -> Result<Vec<f64>> {
    let (w, h) = img.dims();
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(Error::ImageTooSmall { width: w, height: h, min: MIN_SIDE });
    }
    let n = img.data.len() as f64;
    let mean = img.data.iter().sum::<f64>() / n;
    let m2 = img.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = img.data.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = img.data.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let (std, skew, kurt) = if m2 > 1e-18 {
        (m2.sqrt(), m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0, 0.0)
    };
    let mut sorted = img.data.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let levels: Vec<usize> = img
        .data
        .iter()
        .map(|&v| ((v.clamp(0.0, 1.0) * GLCM_LEVELS as f64) as usize).min(GLCM_LEVELS - 1))
        .collect();
    let gx = glcm_features(&levels, w, h, 1, 0);
    let gy = glcm_features(&levels, w, h, 0, 1);

    let mut out = vec![
        mean,
        std,
        skew,
        kurt,
        shannon_entropy(img, 256),
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.75),
    ];
    out.extend_from_slice(&gx);
    out.extend_from_slice(&gy);
    Ok(out)
}

/// Z-scores every dimension across the collection; constant dimensions
/// become 0.
pub fn standardize(features: &[FeatureVector]) -> Vec<FeatureVector> {
    if features.is_empty() {
        return Vec::new();
    }
    let d = features[0].values.len();
    let n = features.len() as f64;
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for f in features {
        for (m, v) in mean.iter_mut().zip(&f.values) {
            *m += v / n;
        }
    }
    for f in features {
        for k in 0..d {
            sd[k] += (f.values[k] - mean[k]).powi(2) / n;
        }
    }
    sd.iter_mut().for_each(|s| *s = s.sqrt());
    features
        .iter()
        .map(|f| FeatureVector {
            id: f.id.clone(),
            tag: f.tag.clone(),
            values: (0..d)
                .map(|k| if sd[k] > 1e-12 { (f.values[k] - mean[k]) / sd[k] } else { 0.0 })
                .collect(),
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean Euclidean distance over all pairs drawn one from each group. When
/// both arguments are the same slice, self-pairs are skipped.
pub fn mean_pairwise_distance(a: &[FeatureVector], b: &[FeatureVector]) -> f64 {
    let same = std::ptr::eq(a, b);
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if same && j <= i {
                continue;
            }
            total += dist(&x.values, &y.values);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Writes `id,tag,f0,…,f{D-1}`.
pub fn write_feature_csv(path: &Path, features: &[FeatureVector]) -> Result<()> {
    let d = features.first().map(|f| f.values.len()).unwrap_or(FEATURE_NAMES.len());
    let mut text = String::from("id,tag");
    for k in 0..d {
        let _ = write!(text, ",f{k}");
    }
    text.push('\n');
    for f in features {
        if f.values.len() != d {
            return Err(Error::InvalidInput(format!("feature {} has dimension {}, expected {d}", f.id, f.values.len())));
        }
        let _ = write!(text, "{},{}", f.id, f.tag);
        for v in &f.values {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    crate::io::write_text(path, &text)
}

/// Reads a feature file of any dimension. Every row must match the header.
pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidInput(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::trim)
        .collect();
    if header.len() < 3 || header[0] != "id" || header[1] != "tag" {
        return Err(Error::InvalidInput(format!("{}: header must start with id,tag", path.display())));
    }
    for (k, name) in header[2..].iter().enumerate() {
        if *name != format!("f{k}") {
            return Err(Error::InvalidInput(format!("{}: unexpected column {name}", path.display())));
        }
    }
    let d = header.len() - 2;
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != d + 2 {
            return Err(Error::InvalidInput(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                lineno + 2,
                cols.len(),
                d + 2
            )));
        }
        let values = cols[2..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidInput(format!("{}: bad value {c:?}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(FeatureVector {
            id: cols[0].to_string(),
            tag: cols[1].to_string(),
            values,
        });
    }
    Ok(out)
}
