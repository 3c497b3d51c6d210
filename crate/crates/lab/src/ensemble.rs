//! Ordered parallel map over ensemble members.

use rayon::prelude::*;

use crate::error::LabResult;

/// Runs `f(0..count)` on `workers` threads and returns results in index
/// order, so output never depends on scheduling.
pub fn ordered_map<T, F>(workers: usize, count: usize, f: F) -> LabResult<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> LabResult<T> + Sync,
{
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Mean and sample standard deviation; `sd` is zero for fewer than two values.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
