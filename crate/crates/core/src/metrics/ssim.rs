use crate::{Error, Micrograph, Result};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable "valid" Gaussian filtering: output is `(w-10) x (h-10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = row[x..x + WINDOW].iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += tmp[(y + j) * ow + x] * kv;
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Single-scale SSIM with an 11x11 Gaussian window (σ = 1.5) and the usual
/// constants for a unit dynamic range, averaged over all fully-contained
/// windows.
pub fn ssim(a: &Micrograph, b: &Micrograph) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    let (w, h) = a.dims();
    if w < WINDOW || h < WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: WINDOW,
        });
    }
    let k = gaussian_kernel();
    let x = &a.data;
    let y = &b.data;
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mu_x = filter_valid(x, w, h, &k);
    let mu_y = filter_valid(y, w, h, &k);
    let e_xx = filter_valid(&xx, w, h, &k);
    let e_yy = filter_valid(&yy, w, h, &k);
    let e_xy = filter_valid(&xy, w, h, &k);
    let n = mu_x.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let sxx = e_xx[i] - mx * mx;
        let syy = e_yy[i] - my * my;
        let sxy = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + C1) * (2.0 * sxy + C2);
        let den = (mx * mx + my * my + C1) * (sxx + syy + C2);
        total += num / den;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Micrograph {
        Micrograph::new(w, h, (0..w * h).map(|i| ((i * 7919) % 251) as f64 / 250.0).collect()).unwrap()
    }

    #[test]
    fn identical_images_score_one() {
        let a = ramp(32, 24);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_images_follow_the_luminance_term() {
        let (m1, m2) = (0.2, 0.7);
        let a = Micrograph::constant(16, 16, m1);
        let b = Micrograph::constant(16, 16, m2);
        let expect = (2.0 * m1 * m2 + C1) / (m1 * m1 + m2 * m2 + C1);
        assert!((ssim(&a, &b).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn small_images_are_rejected() {
        let a = Micrograph::constant(10, 20, 0.5);
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
        assert!(ssim(&ramp(12, 12), &ramp(13, 12)).is_err());
    }

    #[test]
    fn noise_lowers_the_score() {
        let a = ramp(24, 24);
        let b = Micrograph::from_clamped(24, 24, a.data.iter().enumerate().map(|(i, v)| v + if i % 3 == 0 { 0.2 } else { -0.1 }).collect());
        let s = ssim(&a, &b).unwrap();
        assert!(s < 1.0 && s > -1.0);
    }
}
