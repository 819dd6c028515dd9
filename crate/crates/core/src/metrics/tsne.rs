//! Exact t-SNE (no tree approximation), single-threaded for determinism.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::{Error, Result};

/// Entropy tolerance of the perplexity calibration, in bits.
pub const CALIBRATION_TOLERANCE: f64 = 1e-5;
const MAX_BISECTIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    /// `None` picks `max(n / (4 · exaggeration), 50)`.
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    /// Share of the iterations run with exaggerated affinities and low momentum.
    pub exaggeration_fraction: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            learning_rate: None,
            early_exaggeration: 12.0,
            exaggeration_fraction: 0.25,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub ids: Vec<String>,
    pub tags: Vec<String>,
    pub points: Vec<(f64, f64)>,
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
}

/// Output of one optimization, including diagnostics.
#[derive(Clone, Debug)]
pub struct TsneRun {
    pub embedding: Embedding2D,
    /// KL(P‖Q) against the unexaggerated P, one value per iteration.
    pub kl_history: Vec<f64>,
    /// Entropy (bits) of every calibrated conditional row.
    pub row_entropies: Vec<f64>,
    /// First iteration without exaggeration.
    pub exaggeration_end: usize,
}

/// Row-stochastic conditional affinities `P(j|i)` plus calibration results.
#[derive(Clone, Debug)]
pub struct Affinities {
    pub n: usize,
    pub conditional: Vec<f64>,
    pub betas: Vec<f64>,
    pub entropies: Vec<f64>,
}

fn row_distribution(d: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let dmin = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    for (j, o) in out.iter_mut().enumerate() {
        *o = if j == i { 0.0 } else { (-beta * (d[j] - dmin)).exp() };
        z += *o;
    }
    let mut h = 0.0;
    for o in out.iter_mut() {
        *o /= z;
        if *o > 0.0 {
            h -= *o * o.log2();
        }
    }
    h
}

/// Binary search per row for the Gaussian precision whose conditional
/// distribution has entropy `log2(perplexity)`.
pub fn calibrate_affinities(sq_dists: &[f64], n: usize, perplexity: f64) -> Affinities {
    assert_eq!(sq_dists.len(), n * n);
    let target = perplexity.log2();
    let mut conditional = vec![0.0; n * n];
    let mut betas = vec![1.0; n];
    let mut entropies = vec![0.0; n];
    for i in 0..n {
        let d = &sq_dists[i * n..(i + 1) * n];
        let row = &mut conditional[i * n..(i + 1) * n];
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut beta = 1.0;
        let mut h = row_distribution(d, i, beta, row);
        for _ in 0..MAX_BISECTIONS {
            if (h - target).abs() < CALIBRATION_TOLERANCE {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
            h = row_distribution(d, i, beta, row);
        }
        betas[i] = beta;
        entropies[i] = h;
    }
    Affinities {
        n,
        conditional,
        betas,
        entropies,
    }
}

fn squared_distances(features: &[FeatureVector]) -> Vec<f64> {
    let n = features.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = features[i]
                .values
                .iter()
                .zip(&features[j].values)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

pub fn tsne(features: &[FeatureVector], params: &TsneParams) -> Result<TsneRun> {
    let n = features.len();
    if !(params.perplexity > 0.0) {
        return Err(Error::InvalidParameter("perplexity must be positive".into()));
    }
    if (n as f64) < 3.0 * params.perplexity {
        return Err(Error::InvalidInput(format!(
            "t-SNE needs at least 3 * perplexity = {} points, got {n}",
            3.0 * params.perplexity
        )));
    }
    let dim = features[0].values.len();
    for f in features {
        if f.values.len() != dim {
            return Err(Error::InvalidInput(format!("feature {} has dimension {}, expected {dim}", f.id, f.values.len())));
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("feature {} has non-finite values", f.id)));
        }
    }

    let aff = calibrate_affinities(&squared_distances(features), n, params.perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((aff.conditional[i * n + j] + aff.conditional[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let lr = params
        .learning_rate
        .unwrap_or_else(|| (n as f64 / params.early_exaggeration / 4.0).max(50.0));
    let exaggeration_end = (params.iterations as f64 * params.exaggeration_fraction).round() as usize;

    let mut num = vec![0.0; n * n];
    let mut grad = vec![[0.0f64; 2]; n];
    let mut kl_history = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        let (exag, momentum) = if it < exaggeration_end {
            (params.early_exaggeration, params.initial_momentum)
        } else {
            (1.0, params.final_momentum)
        };
        let mut z = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                num[j * n + i] = v;
                z += 2.0 * v;
            }
        }
        let mut kl = 0.0;
        for i in 0..n {
            let mut g = [0.0, 0.0];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let pij = p[i * n + j];
                let q = (num[i * n + j] / z).max(1e-12);
                kl += pij * (pij / q).ln();
                let mult = (exag * pij - q) * num[i * n + j];
                g[0] += mult * (y[i][0] - y[j][0]);
                g[1] += mult * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        kl_history.push(kl);

        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (update[i][k] > 0.0);
                gains[i][k] = if same_sign { gains[i][k] * 0.8 } else { gains[i][k] + 0.2 };
                gains[i][k] = gains[i][k].max(0.01);
                update[i][k] = momentum * update[i][k] - lr * gains[i][k] * grad[i][k];
                y[i][k] += update[i][k];
            }
        }
        let (mx, my) = y.iter().fold((0.0, 0.0), |a, v| (a.0 + v[0], a.1 + v[1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        for v in &mut y {
            v[0] -= mx;
            v[1] -= my;
        }
    }

    Ok(TsneRun {
        embedding: Embedding2D {
            ids: features.iter().map(|f| f.id.clone()).collect(),
            tags: features.iter().map(|f| f.tag.clone()).collect(),
            points: y.iter().map(|v| (v[0], v[1])).collect(),
            perplexity: params.perplexity,
            iterations: params.iterations,
            seed: params.seed,
        },
        kl_history,
        row_entropies: aff.entropies,
        exaggeration_end,
    })
}

/// Mean silhouette coefficient of `points` under `labels` (Euclidean).
/// Points in singleton clusters contribute 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    assert_eq!(points.len(), labels.len());
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    let k = labels.iter().copied().max().unwrap() + 1;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(&points[i], &points[j]);
            }
        }
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

pub fn write_embedding_csv(path: &Path, emb: &Embedding2D) -> Result<()> {
    let mut text = String::from("id,tag,x,y\n");
    for ((id, tag), (x, y)) in emb.ids.iter().zip(&emb.tags).zip(&emb.points) {
        let _ = writeln!(text, "{id},{tag},{x},{y}");
    }
    crate::io::write_text(path, &text)
}

/// Reads `id,tag,x,y` rows back as `(id, tag, x, y)`.
pub fn read_embedding_csv(path: &Path) -> Result<Vec<(String, String, f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("id,tag,x,y") {
        return Err(Error::InvalidInput(format!("{}: expected header id,tag,x,y", path.display())));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("{}: bad coordinate {s:?}", path.display())))
            };
            if c.len() != 4 {
                return Err(Error::InvalidInput(format!("{}: malformed row {l:?}", path.display())));
            }
            Ok((c[0].to_string(), c[1].to_string(), parse(c[2])?, parse(c[3])?))
        })
        .collect()
}
