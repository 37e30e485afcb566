//! Small statistics helpers for the experiment suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Critical value of the chi-square distribution with `df` degrees of
/// freedom at significance `alpha` (upper tail).
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha)
}

/// Pearson statistic against a uniform expectation over `counts.len()` bins.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and variance of the number of colliding pairs among `n` independent
/// uniform draws from a domain of size `m`. Pair indicators are pairwise
/// independent, so the variance is the sum of the per-pair variances.
pub fn collision_moments(n: usize, m: u64) -> (f64, f64) {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    let q = 1.0 / m as f64;
    (pairs * q, pairs * q * (1.0 - q))
}
