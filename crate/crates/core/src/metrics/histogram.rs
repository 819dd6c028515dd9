use crate::Micrograph;

#[inline]
fn bin_of(v: f64, n_bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1)
}

/// Normalized intensity histogram over `n_bins` equal bins of `[0, 1]`.
///
/// For 256 bins an 8-bit value `k` lands in bin `k`.
pub fn histogram(img: &Micrograph, n_bins: usize) -> Vec<f64> {
    assert!(n_bins > 0, "n_bins must be positive");
    let mut counts = vec![0usize; n_bins];
    for &v in &img.data {
        counts[bin_of(v, n_bins)] += 1;
    }
    let n = img.data.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Shannon entropy of the intensity histogram, in bits.
pub fn shannon_entropy(img: &Micrograph, n_bins: usize) -> f64 {
    histogram(img, n_bins)
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Histogram intersection Σ_k min(p_k, q_k).
pub fn histogram_overlap(a: &Micrograph, b: &Micrograph, n_bins: usize) -> f64 {
    histogram(a, n_bins)
        .into_iter()
        .zip(histogram(b, n_bins))
        .map(|(p, q)| p.min(q))
        .sum()
}
