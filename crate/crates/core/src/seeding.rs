//! Periodic Voronoi polycrystals with Lloyd area regularization.
//!
//! Pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`; distances are
//! toroidal so tessellations tile seamlessly under the periodic stepper.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Exec, InstanceMap, Result};

/// Minimum toroidal spacing between freshly drawn seeds (px). At this
/// spacing the pixel containing a seed always belongs to that seed's cell.
pub const MIN_SEED_SPACING: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    pub points: Vec<(f64, f64)>,
    pub width: usize,
    pub height: usize,
    pub rng_seed: u64,
}

impl SeedSet {
    pub fn new(points: Vec<(f64, f64)>, width: usize, height: usize, rng_seed: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("a seed set needs at least one point".into()));
        }
        if points.len() > u16::MAX as usize {
            return Err(Error::InvalidInput(format!("{} seeds exceed the 16-bit label range", points.len())));
        }
        for &(x, y) in &points {
            if !(x >= 0.0 && x < width as f64 && y >= 0.0 && y < height as f64) {
                return Err(Error::InvalidInput(format!("seed ({x}, {y}) lies outside {width}x{height}")));
            }
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("seed points must be pairwise distinct".into()));
        }
        Ok(SeedSet { points, width, height, rng_seed })
    }

    /// `count` uniform random seeds, kept at least [`MIN_SEED_SPACING`] apart
    /// whenever the domain leaves room for it.
    pub fn random(count: usize, width: usize, height: usize, rng_seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("seed count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let (wf, hf) = (width as f64, height as f64);
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(count);
        let mut spacing = MIN_SEED_SPACING;
        let mut misses = 0usize;
        while points.len() < count {
            let p = (rng.random::<f64>() * wf, rng.random::<f64>() * hf);
            let ok = points.iter().all(|&q| {
                let d2 = torus_d2(p, q, wf, hf);
                d2 >= spacing * spacing && d2 > 0.0
            });
            if ok {
                points.push(p);
                misses = 0;
            } else {
                misses += 1;
                if misses > 10_000 {
                    spacing *= 0.5;
                    misses = 0;
                }
            }
        }
        SeedSet::new(points, width, height, rng_seed)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[inline]
fn circ(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).abs() % period;
    d.min(period - d)
}

#[inline]
fn torus_d2(p: (f64, f64), q: (f64, f64), w: f64, h: f64) -> f64 {
    let dx = circ(p.0, q.0, w);
    let dy = circ(p.1, q.1, h);
    dx * dx + dy * dy
}

/// Circular distance bounds from `s` to the interval `[lo, hi]` (lo ≤ hi,
/// not wrapping).
fn axis_bounds(s: f64, lo: f64, hi: f64, period: f64) -> (f64, f64) {
    let min = if s >= lo && s <= hi {
        0.0
    } else {
        circ(s, lo, period).min(circ(s, hi, period))
    };
    let anti = (s + period / 2.0) % period;
    let max = if (anti >= lo && anti <= hi) || (anti + period >= lo && anti + period <= hi) {
        period / 2.0
    } else {
        circ(s, lo, period).max(circ(s, hi, period))
    };
    (min, max)
}

const BLOCK: usize = 16;

/// Nearest-seed labelling under the toroidal metric; ties go to the lowest
/// seed index. Seed `k` (0-based) receives label `k + 1`.
pub fn voronoi(seeds: &SeedSet) -> InstanceMap {
    let (w, h) = (seeds.width, seeds.height);
    let (wf, hf) = (w as f64, h as f64);
    let mut labels = vec![0u16; w * h];
    let mut candidates: Vec<usize> = Vec::with_capacity(seeds.len());
    for by in (0..h).step_by(BLOCK) {
        let by1 = (by + BLOCK).min(h);
        for bx in (0..w).step_by(BLOCK) {
            let bx1 = (bx + BLOCK).min(w);
            let (xlo, xhi) = (bx as f64 + 0.5, bx1 as f64 - 0.5);
            let (ylo, yhi) = (by as f64 + 0.5, by1 as f64 - 0.5);
            // Any seed whose closest approach exceeds the best worst-case
            // distance cannot own a pixel of this block.
            let bounds: Vec<(f64, f64)> = seeds
                .points
                .iter()
                .map(|&(sx, sy)| {
                    let (mnx, mxx) = axis_bounds(sx, xlo, xhi, wf);
                    let (mny, mxy) = axis_bounds(sy, ylo, yhi, hf);
                    (mnx * mnx + mny * mny, mxx * mxx + mxy * mxy)
                })
                .collect();
            let cutoff = bounds.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
            candidates.clear();
            candidates.extend(
                bounds
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.0 <= cutoff * (1.0 + 1e-12) + 1e-9)
                    .map(|(k, _)| k),
            );
            for y in by..by1 {
                let py = y as f64 + 0.5;
                for x in bx..bx1 {
                    let p = (x as f64 + 0.5, py);
                    let mut best = f64::INFINITY;
                    let mut owner = 0usize;
                    for &k in &candidates {
                        let d2 = torus_d2(p, seeds.points[k], wf, hf);
                        if d2 < best {
                            best = d2;
                            owner = k;
                        }
                    }
                    labels[y * w + x] = (owner + 1) as u16;
                }
            }
        }
    }
    InstanceMap {
        width: w,
        height: h,
        labels,
    }
}

/// Population coefficient of variation of the cell areas of labels `1..=n`
/// (empty labels count as zero area).
pub fn area_cv(map: &InstanceMap, n: usize) -> f64 {
    let areas = map.areas();
    let vals: Vec<f64> = (1..=n).map(|l| *areas.get(l).unwrap_or(&0) as f64).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    var.sqrt() / mean
}

/// One Lloyd iteration: every seed moves to the circular-mean centroid of
/// its current cell. Seeds with empty cells stay put.
pub fn lloyd_step(seeds: &SeedSet) -> SeedSet {
    let map = voronoi(seeds);
    let (w, h) = (seeds.width, seeds.height);
    let n = seeds.len();
    // (cos x, sin x, cos y, sin y, count)
    let mut acc = vec![[0.0f64; 5]; n];
    let col: Vec<(f64, f64)> = (0..w).map(|x| angle_of(x, w)).collect();
    let row: Vec<(f64, f64)> = (0..h).map(|y| angle_of(y, h)).collect();
    for y in 0..h {
        for x in 0..w {
            let a = &mut acc[map.get(x, y) as usize - 1];
            a[0] += col[x].0;
            a[1] += col[x].1;
            a[2] += row[y].0;
            a[3] += row[y].1;
            a[4] += 1.0;
        }
    }
    let points = seeds
        .points
        .iter()
        .zip(&acc)
        .map(|(&(sx, sy), a)| {
            if a[4] == 0.0 {
                return (sx, sy);
            }
            (
                circular_mean(a[0], a[1], w).unwrap_or(sx),
                circular_mean(a[2], a[3], h).unwrap_or(sy),
            )
        })
        .collect();
    SeedSet {
        points,
        width: w,
        height: h,
        rng_seed: seeds.rng_seed,
    }
}

fn angle_of(i: usize, period: usize) -> (f64, f64) {
    let t = TAU * (i as f64 + 0.5) / period as f64;
    (t.cos(), t.sin())
}

fn circular_mean(c: f64, s: f64, period: usize) -> Option<f64> {
    if c.hypot(s) < 1e-12 {
        return None;
    }
    let p = period as f64;
    let v = s.atan2(c).rem_euclid(TAU) * p / TAU;
    // rem_euclid can round up to exactly `p`
    Some(if v >= p { 0.0 } else { v })
}

/// Lloyd relaxation until the cell-area CV drops to `cv_target` or
/// `max_iters` iterations have run.
pub fn regularize(seeds: &SeedSet, max_iters: usize, cv_target: f64) -> SeedSet {
    let mut current = seeds.clone();
    for _ in 0..max_iters {
        if area_cv(&voronoi(&current), current.len()) <= cv_target {
            break;
        }
        current = lloyd_step(&current);
    }
    current
}

/// Corpus generation knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusOptions {
    pub lloyd_iters: usize,
    pub cv_target: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            lloyd_iters: 50,
            cv_target: 0.35,
        }
    }
}

/// Regularized tessellation for structure `index` of a corpus.
pub fn generate_structure(
    n_grains: usize,
    width: usize,
    height: usize,
    rng_seed: u64,
    opts: CorpusOptions,
) -> Result<InstanceMap> {
    let seeds = SeedSet::random(n_grains, width, height, rng_seed)?;
    let relaxed = regularize(&seeds, opts.lloyd_iters, opts.cv_target);
    Ok(voronoi(&relaxed))
}

/// `n_structures` tessellations; structure `k` uses `rng_seed = base_seed + k`.
pub fn generate_corpus(
    n_structures: usize,
    n_grains: usize,
    width: usize,
    height: usize,
    base_seed: u64,
    opts: CorpusOptions,
    exec: Exec,
) -> Result<Vec<InstanceMap>> {
    if n_structures == 0 {
        return Err(Error::InvalidParameter("n_structures must be >= 1".into()));
    }
    let indices: Vec<u64> = (0..n_structures as u64).collect();
    exec.map(&indices, |&k| {
        generate_structure(n_grains, width, height, base_seed.wrapping_add(k), opts)
    })
    .into_iter()
    .collect()
}
