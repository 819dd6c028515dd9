//! Procedural SEM-like appearance for clean φ renders, and checks that an
//! externally translated image still carries the ground-truth boundaries.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, EntryValidation};
use crate::metrics::boundary_f1;
use crate::{io, Error, Exec, InstanceMap, Micrograph, Result, SegmentationMask};

/// Tolerance (px) of the ridge-vs-mask Boundary F1.
pub const MORPHOLOGY_TOLERANCE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppearanceParams {
    /// Per-grain mean gray is drawn uniformly from this range.
    pub grain_gray_range: (f64, f64),
    pub speckle_strength: f64,
    pub detector_noise_sigma: f64,
    pub illumination_amplitude: f64,
    /// Maximum horizontal row offset in pixels.
    pub scanline_jitter: usize,
    pub blur_sigma: f64,
    pub rng_seed: u64,
}

impl Default for AppearanceParams {
    fn default() -> Self {
        AppearanceParams {
            grain_gray_range: (0.35, 0.75),
            speckle_strength: 0.15,
            detector_noise_sigma: 0.05,
            illumination_amplitude: 0.08,
            scanline_jitter: 1,
            blur_sigma: 0.8,
            rng_seed: 0,
        }
    }
}

impl AppearanceParams {
    /// The configuration under which `texturize` returns φ unchanged.
    pub fn identity() -> Self {
        AppearanceParams {
            grain_gray_range: (1.0, 1.0),
            speckle_strength: 0.0,
            detector_noise_sigma: 0.0,
            illumination_amplitude: 0.0,
            scanline_jitter: 0,
            blur_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.grain_gray_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter(format!("grain_gray_range {:?} must lie in [0, 1]", self.grain_gray_range)));
        }
        for (name, v) in [
            ("speckle_strength", self.speckle_strength),
            ("detector_noise_sigma", self.detector_noise_sigma),
            ("illumination_amplitude", self.illumination_amplitude),
            ("blur_sigma", self.blur_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Separable Gaussian blur with reflected borders; `sigma = 0` copies.
pub fn gaussian_blur(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();
    let reflect = |i: isize, n: usize| -> usize {
        let n = n as isize;
        if n == 1 {
            return 0;
        }
        let p = 2 * (n - 1);
        let r = i.rem_euclid(p);
        (if r >= n { p - r } else { r }) as usize
    };
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * data[y * width + reflect(x as isize + k as isize - radius, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect(y as isize + k as isize - radius, height) * width + x])
                .sum();
        }
    }
    out
}

/// Applies the appearance pipeline: per-grain gray, φ modulation,
/// low-frequency illumination, multiplicative speckle, detector noise,
/// per-row jitter, blur and clamping. Deterministic for a given seed.
pub fn texturize(phi: &Micrograph, labels: &InstanceMap, params: &AppearanceParams) -> Result<Micrograph> {
    params.validate()?;
    let (w, h) = phi.dims();
    if labels.dims() != (w, h) {
        return Err(Error::DimensionMismatch { expected: (w, h), actual: labels.dims() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let (lo, hi) = params.grain_gray_range;
    let grays: Vec<f64> = (0..=labels.max_label() as usize)
        .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect();
    let mut v: Vec<f64> = phi
        .data
        .iter()
        .zip(&labels.labels)
        .map(|(&p, &l)| if l == 0 { 0.5 * (lo + hi) * p } else { grays[l as usize] * p })
        .collect();

    if params.illumination_amplitude > 0.0 {
        const MODES: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)];
        let n_terms = rng.random_range(2..=4);
        let terms: Vec<((f64, f64), f64)> = (0..n_terms)
            .map(|_| (MODES[rng.random_range(0..MODES.len())], rng.random_range(0.0..TAU)))
            .collect();
        let amp = params.illumination_amplitude / n_terms as f64;
        for y in 0..h {
            for x in 0..w {
                let (u, s) = (x as f64 / w as f64, y as f64 / h as f64);
                v[y * w + x] += terms
                    .iter()
                    .map(|((fx, fy), phase)| amp * (TAU * (fx * u + fy * s) + phase).sin())
                    .sum::<f64>();
            }
        }
    }
    if params.speckle_strength > 0.0 {
        for p in &mut v {
            let n: f64 = StandardNormal.sample(&mut rng);
            *p *= 1.0 + params.speckle_strength * n;
        }
    }
    if params.detector_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, params.detector_noise_sigma).expect("validated sigma");
        for p in &mut v {
            *p += noise.sample(&mut rng);
        }
    }
    if params.scanline_jitter > 0 {
        let j = params.scanline_jitter as i64;
        for y in 0..h {
            let shift = rng.random_range(-j..=j) as isize;
            if shift != 0 {
                let row: Vec<f64> = v[y * w..(y + 1) * w].to_vec();
                for x in 0..w {
                    let src = (x as isize - shift).clamp(0, w as isize - 1) as usize;
                    v[y * w + x] = row[src];
                }
            }
        }
    }
    let v = gaussian_blur(&v, w, h, params.blur_sigma);
    Ok(Micrograph::from_clamped(w, h, v).with_pixel_scale(phi.pixel_scale))
}

/// Settings of the dark-ridge detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeParams {
    pub smoothing_sigma: f64,
    /// Depth below the flanks at distance `reach` needed to count as a ridge.
    pub min_contrast: f64,
    pub reach: usize,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams {
            smoothing_sigma: 1.0,
            min_contrast: 0.04,
            reach: 2,
        }
    }
}

/// Marks pixels that are local intensity minima along at least one of the
/// four principal directions and sit `min_contrast` below the mean of the
/// two flank pixels `reach` steps away.
pub fn detect_ridges(img: &Micrograph, params: &RidgeParams) -> SegmentationMask {
    let (w, h) = img.dims();
    let s = gaussian_blur(&img.data, w, h, params.smoothing_sigma);
    let r = params.reach.max(1) as isize;
    let at = |x: isize, y: isize| s[y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize];
    let mut data = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = at(x, y);
            let ridge = [(1, 0), (0, 1), (1, 1), (1, -1)].iter().any(|&(dx, dy)| {
                c <= at(x - dx, y - dy)
                    && c <= at(x + dx, y + dy)
                    && 0.5 * (at(x - r * dx, y - r * dy) + at(x + r * dx, y + r * dy)) - c >= params.min_contrast
            });
            data[y as usize * w + x as usize] = u8::from(ridge);
        }
    }
    SegmentationMask { width: w, height: h, data }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphologyCheck {
    pub score: f64,
    pub pass: bool,
}

/// Boundary F1 (tolerance 3 px) between `mask` and the ridges of `translated`.
pub fn verify_morphology_preserved(
    mask: &SegmentationMask,
    translated: &Micrograph,
    min_score: f64,
) -> Result<MorphologyCheck> {
    let ridges = detect_ridges(translated, &RidgeParams::default());
    let score = boundary_f1(&ridges, mask, MORPHOLOGY_TOLERANCE)?;
    Ok(MorphologyCheck { score, pass: score >= min_score })
}

fn ingest_entry(
    image_dir: &Path,
    root: &Path,
    image: &Path,
    mask: &Path,
    min_score: f64,
) -> std::result::Result<(std::path::PathBuf, MorphologyCheck), String> {
    let name = image.file_name().ok_or_else(|| format!("entry image {} has no file name", image.display()))?;
    let translated_path = image_dir.join(name);
    if !translated_path.is_file() {
        return Err(format!("missing translated image {}", translated_path.display()));
    }
    let translated = io::read_micrograph(&translated_path).map_err(|e| e.to_string())?;
    let mask = io::read_mask(&root.join(mask)).map_err(|e| e.to_string())?;
    if translated.dims() != mask.dims() {
        return Err(format!(
            "dimension mismatch: image {:?} vs mask {:?}",
            translated.dims(),
            mask.dims()
        ));
    }
    if translated.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err("intensities outside [0, 1]".into());
    }
    let check = verify_morphology_preserved(&mask, &translated, min_score).map_err(|e| e.to_string())?;
    Ok((translated_path, check))
}

/// Validates externally translated images (looked up in `image_dir` by the
/// file name of each entry's image) against the manifest's masks, resolved
/// under `root`. Every entry is kept and annotated; failures never abort
/// the batch. Passing entries point at the translated image.
pub fn ingest_translated(
    image_dir: &Path,
    manifest: &DatasetManifest,
    root: &Path,
    min_score: f64,
    exec: Exec,
) -> DatasetManifest {
    let results = exec.map(&manifest.entries, |e| ingest_entry(image_dir, root, &e.image, &e.mask, min_score));
    let mut out = manifest.clone();
    out.provenance.push(format!(
        "ingested translated images from {} (min_score {min_score})",
        image_dir.display()
    ));
    for (entry, result) in out.entries.iter_mut().zip(results) {
        entry.validation = Some(match result {
            Ok((path, check)) => {
                entry.image = path;
                EntryValidation { score: Some(check.score), min_score, pass: check.pass, error: None }
            }
            Err(msg) => EntryValidation { score: None, min_score, pass: false, error: Some(msg) },
        });
    }
    out
}
