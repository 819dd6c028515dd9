use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Micrograph, Result, SegmentationMask};

/// Per-axis translation bound as a fraction of the patch side.
pub const MAX_TRANSLATION_FRACTION: f64 = 0.1;
pub const SCALE_RANGE: (f64, f64) = (0.8, 1.2);

/// Geometric transform about the image centre: optional horizontal flip,
/// then scale, then rotation, then translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationDescriptor {
    pub rotation_deg: f64,
    /// (dx, dy) in pixels.
    pub translation: (f64, f64),
    pub scale: f64,
    pub flip_horizontal: bool,
    /// Seed the descriptor was drawn from.
    pub rng_seed: u64,
}

impl AugmentationDescriptor {
    pub fn identity() -> Self {
        AugmentationDescriptor {
            rotation_deg: 0.0,
            translation: (0.0, 0.0),
            scale: 1.0,
            flip_horizontal: false,
            rng_seed: 0,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let ok = (SCALE_RANGE.0..=SCALE_RANGE.1).contains(&self.scale)
            && self.translation.0.abs() <= MAX_TRANSLATION_FRACTION * width as f64
            && self.translation.1.abs() <= MAX_TRANSLATION_FRACTION * height as f64
            && self.rotation_deg.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("augmentation out of range: {self:?}")))
        }
    }

    /// Maps an output pixel-centre position to the source position it samples.
    fn source_of(&self, x: f64, y: f64, width: usize, height: usize) -> (f64, f64) {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let (dx, dy) = (x - cx - self.translation.0, y - cy - self.translation.1);
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let (mut u, v) = ((c * dx + s * dy) / self.scale, (-s * dx + c * dy) / self.scale);
        if self.flip_horizontal {
            u = -u;
        }
        (cx + u, cy + v)
    }
}

pub fn sample_descriptor(width: usize, height: usize, rng_seed: u64) -> AugmentationDescriptor {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let tx = MAX_TRANSLATION_FRACTION * width as f64;
    let ty = MAX_TRANSLATION_FRACTION * height as f64;
    AugmentationDescriptor {
        rotation_deg: rng.random_range(0.0..360.0),
        translation: (rng.random_range(-tx..=tx), rng.random_range(-ty..=ty)),
        scale: rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1),
        flip_horizontal: rng.random_bool(0.5),
        rng_seed,
    }
}

/// Reflects a continuous pixel-index coordinate into `[0, n - 1]`.
fn reflect(u: f64, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let period = 2.0 * (n - 1) as f64;
    let r = u.rem_euclid(period);
    if r > (n - 1) as f64 {
        period - r
    } else {
        r
    }
}

/// Applies the same transform to an image (bilinear) and its mask
/// (nearest neighbour). Out-of-frame samples are reflected back inside.
pub fn apply_descriptor(
    image: &Micrograph,
    mask: &SegmentationMask,
    desc: &AugmentationDescriptor,
) -> Result<(Micrograph, SegmentationMask)> {
    let (w, h) = image.dims();
    if mask.dims() != (w, h) {
        return Err(Error::DimensionMismatch { expected: (w, h), actual: mask.dims() });
    }
    let mut img = vec![0.0; w * h];
    let mut msk = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = desc.source_of(x as f64 + 0.5, y as f64 + 0.5, w, h);
            let (u, v) = (reflect(sx - 0.5, w), reflect(sy - 0.5, h));
            let (x0, y0) = (u.floor() as usize, v.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (u - x0 as f64, v - y0 as f64);
            let top = image.get(x0, y0) * (1.0 - fx) + image.get(x1, y0) * fx;
            let bottom = image.get(x0, y1) * (1.0 - fx) + image.get(x1, y1) * fx;
            img[y * w + x] = top * (1.0 - fy) + bottom * fy;
            let (nx, ny) = (u.round() as usize, v.round() as usize);
            msk[y * w + x] = mask.data[ny.min(h - 1) * w + nx.min(w - 1)];
        }
    }
    Ok((
        Micrograph::from_clamped(w, h, img).with_pixel_scale(image.pixel_scale),
        SegmentationMask { width: w, height: h, data: msk },
    ))
}

/// Draws `n_variants` descriptors from `rng_seed` and applies each.
/// Variant `k` uses descriptor seed `rng_seed * 1_000_003 + k`, so any
/// single variant can be replayed from its recorded descriptor.
pub fn augment_pair(
    image: &Micrograph,
    mask: &SegmentationMask,
    n_variants: usize,
    rng_seed: u64,
) -> Result<Vec<(Micrograph, SegmentationMask, AugmentationDescriptor)>> {
    if n_variants == 0 {
        return Err(Error::InvalidParameter("n_variants must be at least 1".into()));
    }
    (0..n_variants as u64)
        .map(|k| {
            let desc = sample_descriptor(image.width, image.height, rng_seed.wrapping_mul(1_000_003).wrapping_add(k));
            let (i, m) = apply_descriptor(image, mask, &desc)?;
            Ok((i, m, desc))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(w: usize, h: usize) -> (Micrograph, SegmentationMask) {
        let img = Micrograph::new(w, h, (0..w * h).map(|i| ((i * 37) % 101) as f64 / 100.0).collect()).unwrap();
        let mask = SegmentationMask::new(w, h, (0..w * h).map(|i| u8::from(i % w == 7 || i / w == 3)).collect()).unwrap();
        (img, mask)
    }

    #[test]
    fn identity_is_exact() {
        let (img, mask) = pair(23, 17);
        let (i, m) = apply_descriptor(&img, &mask, &AugmentationDescriptor::identity()).unwrap();
        assert_eq!(i, img);
        assert_eq!(m, mask);
    }

    #[test]
    fn flip_mirrors_columns() {
        let (img, mask) = pair(12, 5);
        let desc = AugmentationDescriptor { flip_horizontal: true, ..AugmentationDescriptor::identity() };
        let (i, m) = apply_descriptor(&img, &mask, &desc).unwrap();
        for y in 0..5 {
            for x in 0..12 {
                assert_eq!(i.get(x, y), img.get(11 - x, y));
                assert_eq!(m.is_boundary(x, y), mask.is_boundary(11 - x, y));
            }
        }
    }

    #[test]
    fn count_is_conserved_and_replayable() {
        let (img, mask) = pair(32, 32);
        let out = augment_pair(&img, &mask, 15, 9).unwrap();
        assert_eq!(out.len(), 15);
        for (i, m, d) in &out {
            d.validate(32, 32).unwrap();
            assert_eq!(sample_descriptor(32, 32, d.rng_seed), *d);
            let (ri, rm) = apply_descriptor(&img, &mask, d).unwrap();
            assert_eq!(&ri, i);
            assert_eq!(&rm, m);
        }
    }

    #[test]
    fn reflect_folds_into_range() {
        assert_eq!(reflect(-1.5, 5), 1.5);
        assert_eq!(reflect(5.0, 5), 3.0);
        assert_eq!(reflect(2.25, 5), 2.25);
    }

    proptest! {
        #[test]
        fn mask_stays_binary(seed in 0u64..10_000) {
            let (img, mask) = pair(20, 16);
            let d = sample_descriptor(20, 16, seed);
            let (i, m) = apply_descriptor(&img, &mask, &d).unwrap();
            prop_assert!(m.data.iter().all(|&v| v <= 1));
            prop_assert!(i.data.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
