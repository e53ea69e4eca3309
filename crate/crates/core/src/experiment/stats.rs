//! Summary statistics used by the sweeps and their checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Percentile with linear interpolation between order statistics, `q ∈ [0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(percentile_sorted(&sorted, q))
}

pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Average ranks, ties sharing the mean of their positions (1-based).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a)?, mean(b)?);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Spearman rank correlation; `None` for fewer than two points or a constant series.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&ranks(a), &ranks(b))
}

/// Standard error of the pooled median by resampling whole clusters with
/// replacement. Clusters share correlation (one noise draw each), so
/// resampling individual values would understate the spread.
pub fn cluster_bootstrap_median_se(clusters: &[Vec<f64>], resamples: usize, seed: u64) -> Option<f64> {
    let nonempty: Vec<&Vec<f64>> = clusters.iter().filter(|c| !c.is_empty()).collect();
    if nonempty.is_empty() || resamples < 2 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medians = Vec::with_capacity(resamples);
    let mut pool = Vec::new();
    for _ in 0..resamples {
        pool.clear();
        for _ in 0..nonempty.len() {
            pool.extend_from_slice(nonempty[rng.random_range(0..nonempty.len())]);
        }
        pool.sort_by(f64::total_cmp);
        medians.push(percentile_sorted(&pool, 0.5));
    }
    let m = mean(&medians)?;
    let var = medians.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (resamples - 1) as f64;
    Some(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 1.0), Some(4.0));
        assert_eq!(percentile(&v, 0.5), Some(2.5));
        assert_eq!(percentile(&v, 1.0 / 3.0), Some(2.0));
        assert_eq!(percentile(&[], 0.5), None);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spearman(&x, &[1.0, 4.0, 9.0, 16.0, 25.0]), Some(1.0));
        assert_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        // d = [0, 0, 1, -1, 0] gives 1 - 6 * 2 / (5 * 24) = 0.9
        let r = spearman(&x, &[1.0, 2.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r - 0.9).abs() < 1e-12);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
        assert_eq!(spearman(&x, &[1.0; 5]), None);
    }

    #[test]
    fn bootstrap_se_is_zero_for_identical_clusters() {
        let c = vec![vec![1.0, 2.0, 3.0]; 10];
        assert_eq!(cluster_bootstrap_median_se(&c, 50, 3), Some(0.0));
        let spread: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64]).collect();
        let se = cluster_bootstrap_median_se(&spread, 400, 3).unwrap();
        assert!(se > 0.5 && se < 5.0, "{se}");
    }
}
