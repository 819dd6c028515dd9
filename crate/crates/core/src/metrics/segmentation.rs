use crate::{Error, Result, SegmentationMask};

fn check_dims(a: &SegmentationMask, b: &SegmentationMask) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: b.dims(),
            actual: a.dims(),
        });
    }
    Ok(())
}

fn class_iou(pred: &SegmentationMask, gt: &SegmentationMask, class: u8) -> Result<f64> {
    check_dims(pred, gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.data.iter().zip(&gt.data) {
        let (p, g) = ((p != 0) as u8 == class, (g != 0) as u8 == class);
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Intersection over union of the boundary class; 1 when both are empty.
pub fn iou(pred: &SegmentationMask, gt: &SegmentationMask) -> Result<f64> {
    class_iou(pred, gt, 1)
}

/// Intersection over union of the interior class.
pub fn iou_interior(pred: &SegmentationMask, gt: &SegmentationMask) -> Result<f64> {
    class_iou(pred, gt, 0)
}

/// Exact squared Euclidean distance to the nearest `true` pixel
/// (Felzenszwalb–Huttenlocher lower envelope, separable in x then y).
/// Pixels with no feature anywhere get `f64::INFINITY`.
pub fn squared_distance_transform(features: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(features.len(), width * height);
    let mut grid: Vec<f64> = features
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();
    let mut buf = vec![0.0; width.max(height)];
    let mut out = vec![0.0; width.max(height)];
    for y in 0..height {
        buf[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        edt_1d(&buf[..width], &mut out[..width]);
        grid[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    for x in 0..width {
        for y in 0..height {
            buf[y] = grid[y * width + x];
        }
        edt_1d(&buf[..height], &mut out[..height]);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        d.iter_mut().for_each(|v| *v = f64::INFINITY);
        return;
    }
    // lower envelope of parabolas rooted at finite sites
    let m = sites.len();
    let mut v = vec![0usize; m];
    let mut z = vec![0.0f64; m + 1];
    let mut k = 0usize;
    v[0] = sites[0];
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let key = |p: usize| f[p] + (p * p) as f64;
    for &q in &sites[1..] {
        let mut s = (key(q) - key(v[k])) / (2.0 * (q as f64 - v[k] as f64));
        // z[0] = -inf, so k never underflows
        while s <= z[k] {
            k -= 1;
            s = (key(q) - key(v[k])) / (2.0 * (q as f64 - v[k] as f64));
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of boundary pixels matched within Euclidean
/// distance `theta`.
///
/// Two empty masks agree perfectly (F1 = 1); if only one side has boundary
/// pixels, F1 = 0.
pub fn boundary_scores(pred: &SegmentationMask, gt: &SegmentationMask, theta: f64) -> Result<BoundaryScores> {
    check_dims(pred, gt)?;
    if !(theta >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be >= 0, got {theta}")));
    }
    let (w, h) = pred.dims();
    let pb: Vec<bool> = pred.data.iter().map(|&v| v != 0).collect();
    let gb: Vec<bool> = gt.data.iter().map(|&v| v != 0).collect();
    let (np, ng) = (pb.iter().filter(|&&b| b).count(), gb.iter().filter(|&&b| b).count());
    if np == 0 && ng == 0 {
        return Ok(BoundaryScores { precision: 1.0, recall: 1.0, f1: 1.0 });
    }
    let t2 = theta * theta;
    let matched = |src: &[bool], dist: &[f64]| src.iter().zip(dist).filter(|(&s, &d)| s && d <= t2).count();
    let precision = if np == 0 {
        0.0
    } else {
        matched(&pb, &squared_distance_transform(&gb, w, h)) as f64 / np as f64
    };
    let recall = if ng == 0 {
        0.0
    } else {
        matched(&gb, &squared_distance_transform(&pb, w, h)) as f64 / ng as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BoundaryScores { precision, recall, f1 })
}

pub fn boundary_f1(pred: &SegmentationMask, gt: &SegmentationMask, theta: f64) -> Result<f64> {
    boundary_scores(pred, gt, theta).map(|s| s.f1)
}
