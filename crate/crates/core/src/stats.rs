//! Small estimators shared by the Monte Carlo drivers.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Sample mean and its jackknife standard error. A single sample has
/// standard error 0.
pub fn jackknife_mean(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Identical samples (zero disorder) must give an exact mean and error.
    if samples.iter().all(|&v| v == samples[0]) {
        return (samples[0], 0.0);
    }
    let total: f64 = samples.iter().sum();
    let mean = total / n as f64;
    let loo: Vec<f64> = samples.iter().map(|v| (total - v) / (n - 1) as f64).collect();
    (mean, jackknife_spread(&loo))
}

/// Standard error from leave-one-out replicates `θ_(i)`:
/// `sqrt((n-1)/n Σ (θ_(i) - θ̄)²)`.
pub fn jackknife_spread(replicates: &[f64]) -> f64 {
    let n = replicates.len();
    if n < 2 {
        return 0.0;
    }
    let bar = replicates.iter().sum::<f64>() / n as f64;
    let ss: f64 = replicates.iter().map(|r| (r - bar) * (r - bar)).sum();
    ((n - 1) as f64 / n as f64 * ss).sqrt()
}

/// Ranks with ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; NaN if either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Evaluates `f(0..count)` on `workers` threads (0 = rayon default) and
/// returns results in index order, or the lowest-index error. The output
/// does not depend on the number of workers.
pub(crate) fn map_indexed<T, F>(count: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = if workers == 1 {
        (0..count).map(&f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..count).into_par_iter().map(&f).collect())
    };
    results.into_iter().collect()
}
