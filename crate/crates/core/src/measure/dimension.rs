//! Box-counting dimension from greedy net sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metric::MetricSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub method: String,
    pub estimate: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// (ε, N(ε)) pairs used in the fit.
    pub scales: Vec<(f64, usize)>,
}

/// `count` scales spaced geometrically from `hi` down to `lo`.
pub fn geometric_scales(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    let ratio = (lo / hi).powf(1.0 / (count - 1) as f64);
    (0..count).map(|k| hi * ratio.powi(k as i32)).collect()
}

/// Least-squares slope and rms residual of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

/// Size of the maximal ε-net built by one pass in index order: a point is
/// kept when it lies at distance ≥ ε from every point kept so far.
pub fn greedy_net_size(space: &MetricSpace, eps: f64) -> usize {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..space.len() {
        // samples along curves come in order, so recent centers reject fastest
        if kept.iter().rev().all(|&c| space.dist(i, c) >= eps) {
            kept.push(i);
        }
    }
    kept.len()
}

/// Slope of log N(ε) against log(1/ε), where N(ε) is
/// [`greedy_net_size`].
pub fn box_dimension(space: &MetricSpace, scales: &[f64]) -> Result<DimensionReport> {
    if scales.len() < 4 {
        return Err(param("scales", format!("need at least 4 scales, got {}", scales.len())));
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(param("scales", "scales must be positive"));
    }
    let hi = scales.iter().cloned().fold(f64::MIN, f64::max);
    let lo = scales.iter().cloned().fold(f64::MAX, f64::min);
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(param("scales", format!("scales span {:.3} decades, need at least 1.5", (hi / lo).log10())));
    }
    if space.is_empty() {
        return Err(param("space", "no points to count"));
    }
    let pairs: Vec<(f64, usize)> = scales.par_iter().map(|&e| (e, greedy_net_size(space, e))).collect();
    let x: Vec<f64> = pairs.iter().map(|(e, _)| -e.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|(_, n)| (*n as f64).ln()).collect();
    let (slope, _, residual) = fit_line(&x, &y);
    Ok(DimensionReport {
        method: "boxcount".into(),
        estimate: slope,
        residual,
        scales: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal;

    #[test]
    fn segment_is_one_dimensional() {
        let s = fractal::segment(4001).unwrap().space;
        let r = box_dimension(&s, &geometric_scales(0.1, 0.001, 8)).unwrap();
        assert!((r.estimate - 1.0).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn rejects_narrow_ranges() {
        let s = fractal::segment(11).unwrap().space;
        assert!(box_dimension(&s, &[0.1, 0.05, 0.02]).is_err());
        assert!(box_dimension(&s, &[0.1, 0.08, 0.06, 0.05]).is_err());
    }
}
