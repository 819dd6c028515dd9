use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::contour_length;
use crate::{Error, InstanceMap, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrainStats {
    pub id: u16,
    pub area_px: usize,
    /// Area in squared physical units (`area_px · scale²`).
    pub area_physical: f64,
    pub perimeter: f64,
    pub circularity: f64,
    pub aspect_ratio: f64,
    /// Major-axis angle from +x towards +y (image rows grow downwards), in `[-π/2, π/2)`.
    pub orientation: f64,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub touches_border: bool,
}

pub const STATS_CSV_HEADER: &str =
    "id,area_px,area_physical,perimeter,circularity,aspect_ratio,orientation,centroid_x,centroid_y,touches_border";

#[derive(Clone, Copy)]
struct Acc {
    n: usize,
    sx: f64,
    sy: f64,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

/// One record per non-zero label, ordered by label. Centroids use pixel
/// centres (`x + 0.5`); second moments treat pixels as unit squares.
pub fn grain_stats(instances: &InstanceMap, pixel_scale: f64) -> Vec<GrainStats> {
    let (w, h) = instances.dims();
    let n_labels = instances.max_label() as usize + 1;
    let mut acc = vec![
        Acc {
            n: 0,
            sx: 0.0,
            sy: 0.0,
            x0: usize::MAX,
            y0: usize::MAX,
            x1: 0,
            y1: 0
        };
        n_labels
    ];
    for y in 0..h {
        for x in 0..w {
            let a = &mut acc[instances.get(x, y) as usize];
            a.n += 1;
            a.sx += x as f64 + 0.5;
            a.sy += y as f64 + 0.5;
            a.x0 = a.x0.min(x);
            a.y0 = a.y0.min(y);
            a.x1 = a.x1.max(x);
            a.y1 = a.y1.max(y);
        }
    }

    let mut out = Vec::new();
    for (label, a) in acc.iter().enumerate().skip(1) {
        if a.n == 0 {
            continue;
        }
        let n = a.n as f64;
        let (cx, cy) = (a.sx / n, a.sy / n);
        let (bw, bh) = (a.x1 - a.x0 + 1, a.y1 - a.y0 + 1);
        let mut inside = vec![false; bw * bh];
        let (mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0);
        for y in a.y0..=a.y1 {
            for x in a.x0..=a.x1 {
                if instances.get(x, y) as usize == label {
                    inside[(y - a.y0) * bw + x - a.x0] = true;
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    mxx += dx * dx;
                    myy += dy * dy;
                    mxy += dx * dy;
                }
            }
        }
        let (mxx, myy, mxy) = (mxx / n + 1.0 / 12.0, myy / n + 1.0 / 12.0, mxy / n);
        let half_trace = 0.5 * (mxx + myy);
        let disc = (0.25 * (mxx - myy).powi(2) + mxy * mxy).sqrt();
        let (l1, l2) = (half_trace + disc, half_trace - disc);
        let mut orientation = 0.5 * (2.0 * mxy).atan2(mxx - myy);
        if orientation >= FRAC_PI_2 {
            orientation -= PI;
        }
        let perimeter = contour_length(&inside, bw, bh);
        out.push(GrainStats {
            id: label as u16,
            area_px: a.n,
            area_physical: n * pixel_scale * pixel_scale,
            perimeter,
            circularity: 4.0 * PI * n / (perimeter * perimeter),
            aspect_ratio: (l1 / l2).sqrt(),
            orientation,
            centroid_x: cx,
            centroid_y: cy,
            touches_border: a.x0 == 0 || a.y0 == 0 || a.x1 + 1 == w || a.y1 + 1 == h,
        });
    }
    out
}

pub fn write_stats_csv(path: &Path, stats: &[GrainStats]) -> Result<()> {
    let mut text = String::from(STATS_CSV_HEADER);
    text.push('\n');
    for s in stats {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{}",
            s.id,
            s.area_px,
            s.area_physical,
            s.perimeter,
            s.circularity,
            s.aspect_ratio,
            s.orientation,
            s.centroid_x,
            s.centroid_y,
            s.touches_border
        );
    }
    crate::io::write_text(path, &text)
}

/// Equal-width histogram of `area_px`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeHistogram {
    /// `n_bins + 1` bin edges over `[min, max]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl SizeHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// gnuplot-ready `lo hi count` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# bin_lo\tbin_hi\tcount\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{c}", self.edges[i], self.edges[i + 1]);
        }
        out
    }
}

pub fn size_distribution(stats: &[GrainStats], n_bins: usize) -> Result<SizeHistogram> {
    if stats.is_empty() {
        return Err(Error::InvalidInput("size distribution of zero grains".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    let lo = stats.iter().map(|s| s.area_px).min().unwrap() as f64;
    let hi = stats.iter().map(|s| s.area_px).max().unwrap() as f64;
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; n_bins];
    for s in stats {
        let b = if width > 0.0 { ((s.area_px as f64 - lo) / width) as usize } else { 0 };
        counts[b.min(n_bins - 1)] += 1;
    }
    Ok(SizeHistogram { edges, counts })
}
