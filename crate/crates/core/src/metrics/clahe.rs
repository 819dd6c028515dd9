//! Contrast-limited adaptive histogram equalization on the 8-bit grid.

use serde::{Deserialize, Serialize};

use crate::raster::quantize_u8;
use crate::{Error, Micrograph, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClaheParams {
    pub clip_limit: f64,
    /// Tile grid as (columns, rows).
    pub tiles: (usize, usize),
}

impl Default for ClaheParams {
    fn default() -> Self {
        ClaheParams {
            clip_limit: 2.0,
            tiles: (8, 8),
        }
    }
}

fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

fn tile_lut(pixels: impl Iterator<Item = u8>, tile_area: usize, clip: usize) -> [u8; 256] {
    let mut hist = [0usize; 256];
    for p in pixels {
        hist[p as usize] += 1;
    }
    if clip > 0 {
        let mut excess = 0;
        for h in hist.iter_mut() {
            if *h > clip {
                excess += *h - clip;
                *h = clip;
            }
        }
        let batch = excess / 256;
        let residual = excess - batch * 256;
        for h in hist.iter_mut() {
            *h += batch;
        }
        if residual > 0 {
            let step = (256 / residual).max(1);
            for i in (0..256).step_by(step).take(residual) {
                hist[i] += 1;
            }
        }
    }
    let scale = 255.0 / tile_area as f64;
    let mut lut = [0u8; 256];
    let mut cum = 0usize;
    for (i, h) in hist.iter().enumerate() {
        cum += h;
        lut[i] = (cum as f64 * scale).round().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Returns the equalized image, still on the 8-bit grid (values k/255).
pub fn clahe(img: &Micrograph, params: &ClaheParams) -> Result<Micrograph> {
    let (tx, ty) = params.tiles;
    if tx == 0 || ty == 0 {
        return Err(Error::InvalidParameter("CLAHE tile grid must be non-empty".into()));
    }
    if !(params.clip_limit >= 0.0) {
        return Err(Error::InvalidParameter("CLAHE clip limit must be non-negative".into()));
    }
    let (w, h) = img.dims();
    if w < tx || h < ty {
        return Err(Error::ImageTooSmall { width: w, height: h, min: tx.max(ty) });
    }
    let src: Vec<u8> = img.data.iter().map(|&v| quantize_u8(v)).collect();
    let tw = w.div_ceil(tx);
    let th = h.div_ceil(ty);
    let tile_area = tw * th;
    let clip = if params.clip_limit > 0.0 {
        ((params.clip_limit * tile_area as f64 / 256.0) as usize).max(1)
    } else {
        0
    };

    let mut luts = vec![[0u8; 256]; tx * ty];
    for j in 0..ty {
        for i in 0..tx {
            let pixels = (0..th).flat_map(|yy| {
                let y = reflect101((j * th + yy) as isize, h);
                let src = &src;
                (0..tw).map(move |xx| src[y * w + reflect101((i * tw + xx) as isize, w)])
            });
            luts[j * tx + i] = tile_lut(pixels, tile_area, clip);
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let fy = y as f64 / th as f64 - 0.5;
        let y1 = fy.floor();
        let ya = fy - y1;
        let ty1 = (y1.max(0.0)) as usize;
        let ty2 = ((y1 + 1.0) as usize).min(ty - 1);
        for x in 0..w {
            let fx = x as f64 / tw as f64 - 0.5;
            let x1 = fx.floor();
            let xa = fx - x1;
            let tx1 = (x1.max(0.0)) as usize;
            let tx2 = ((x1 + 1.0) as usize).min(tx - 1);
            let v = src[y * w + x] as usize;
            let l = |r: usize, c: usize| luts[r * tx + c][v] as f64;
            let r = (l(ty1, tx1) * (1.0 - xa) + l(ty1, tx2) * xa) * (1.0 - ya)
                + (l(ty2, tx1) * (1.0 - xa) + l(ty2, tx2) * xa) * ya;
            out[y * w + x] = r.round().clamp(0.0, 255.0) / 255.0;
        }
    }
    Ok(Micrograph::from_clamped(w, h, out).with_pixel_scale(img.pixel_scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::shannon_entropy;

    #[test]
    fn reflect_indexing() {
        let idx: Vec<usize> = (-3..8).map(|i| reflect101(i, 5)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
    }

    #[test]
    fn low_contrast_input_gains_entropy() {
        let (w, h) = (128, 128);
        let data = (0..w * h)
            .map(|i| 0.45 + 0.1 * ((i % w) as f64 / w as f64) + 0.02 * (((i / w) % 7) as f64 / 7.0))
            .collect();
        let img = Micrograph::new(w, h, data).unwrap();
        let eq = clahe(&img, &ClaheParams::default()).unwrap();
        let (before, after) = (shannon_entropy(&img, 256), shannon_entropy(&eq, 256));
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn output_stays_on_8bit_grid_and_range() {
        let img = Micrograph::new(37, 29, (0..37 * 29).map(|i| (i % 256) as f64 / 255.0).collect()).unwrap();
        let eq = clahe(&img, &ClaheParams::default()).unwrap();
        for v in &eq.data {
            assert!((0.0..=1.0).contains(v));
            assert!((v * 255.0 - (v * 255.0).round()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_empty_grid() {
        let img = Micrograph::constant(16, 16, 0.5);
        assert!(clahe(&img, &ClaheParams { clip_limit: 2.0, tiles: (0, 4) }).is_err());
    }
}
