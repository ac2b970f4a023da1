//! Two-sided estimates of the one-dimensional Hausdorff content ℋ¹_∞.
//!
//! A set is given by finite samples together with a component label per
//! sample and a `spacing`: every point of the set lies within `spacing / 2`
//! (along the set) of some sample of its component.
//!
//! The lower bound is certified. A connected set has content at least its
//! diameter, and a family of components whose mutual distances all exceed
//! the sum of their diameters cannot share a cover set cheaper than that
//! sum. Sampled diameters understate true ones, and sampled distances are
//! corrected by `spacing` before use.
//!
//! The upper bound comes from greedy ball covers of the samples at radii
//! halving from the diameter down to the resolution. Each cover set is
//! charged the diameter of its samples plus `spacing`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metric::MetricSpace;

/// Cap on samples placed along edges by [`hausdorff_content_estimate`].
const MAX_EDGE_SAMPLES: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub lower: f64,
    pub upper: f64,
    pub resolution: f64,
}

/// Samples of a set, with component labels and the sampling gap.
pub struct SampledSet<'a> {
    pub len: usize,
    pub dist: &'a (dyn Fn(usize, usize) -> f64 + Sync),
    pub component: Vec<usize>,
    pub spacing: f64,
    /// Known length of the set, if any; content never exceeds it.
    pub length: Option<f64>,
}

fn diam_of(idx: &[usize], dist: &(dyn Fn(usize, usize) -> f64 + Sync)) -> f64 {
    idx.par_iter()
        .enumerate()
        .map(|(k, &i)| idx[k + 1..].iter().map(|&j| dist(i, j)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

impl SampledSet<'_> {
    fn groups(&self) -> Vec<Vec<usize>> {
        let k = self.component.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut g = vec![Vec::new(); k];
        for (i, &c) in self.component.iter().enumerate() {
            g[c].push(i);
        }
        g.retain(|v| !v.is_empty());
        g
    }

    /// max(largest component diameter, sum over a well separated family).
    pub fn lower(&self) -> f64 {
        let groups = self.groups();
        let diams: Vec<f64> = groups.iter().map(|g| diam_of(g, self.dist)).collect();
        let largest = diams.iter().cloned().fold(0.0, f64::max);
        if groups.len() < 2 {
            return largest;
        }
        let gap = |a: usize, b: usize| -> f64 {
            let d = groups[a]
                .par_iter()
                .map(|&i| groups[b].iter().map(|&j| (self.dist)(i, j)).fold(f64::INFINITY, f64::min))
                .reduce(|| f64::INFINITY, f64::min);
            d - self.spacing
        };
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by(|&a, &b| diams[b].total_cmp(&diams[a]));
        let mut family: Vec<usize> = vec![order[0]];
        let mut total = diams[order[0]];
        let mut min_gap = f64::INFINITY;
        for &c in &order[1..] {
            let to_family = family.iter().map(|&f| gap(c, f)).fold(f64::INFINITY, f64::min);
            let next_total = total + diams[c];
            if min_gap.min(to_family) >= next_total {
                family.push(c);
                total = next_total;
                min_gap = min_gap.min(to_family);
            }
        }
        largest.max(total)
    }

    /// Cheapest greedy cover over radii from the diameter down to `resolution`.
    pub fn upper(&self, resolution: f64) -> f64 {
        let all: Vec<usize> = (0..self.len).collect();
        let diam = diam_of(&all, self.dist);
        let mut best = diam + self.spacing;
        if let Some(l) = self.length {
            best = best.min(l);
        }
        let mut rho = diam / 2.0;
        while rho >= resolution && rho > 0.0 {
            let mut covered = vec![false; self.len];
            let mut cost = 0.0;
            for c in 0..self.len {
                if covered[c] {
                    continue;
                }
                let group: Vec<usize> = (c..self.len).filter(|&j| !covered[j] && (self.dist)(c, j) <= rho).collect();
                for &j in &group {
                    covered[j] = true;
                }
                cost += diam_of(&group, self.dist) + self.spacing;
                if cost >= best {
                    break;
                }
            }
            best = best.min(cost);
            rho /= 2.0;
        }
        best
    }

    pub fn estimate(&self, resolution: f64) -> ContentEstimate {
        if self.len == 0 {
            return ContentEstimate {
                lower: 0.0,
                upper: 0.0,
                resolution,
            };
        }
        let lower = self.lower();
        let upper = self.upper(resolution).max(lower);
        ContentEstimate { lower, upper, resolution }
    }
}

/// Content of the union of `points` and the straight `edges` between them.
///
/// Coordinate spaces sample each edge along its segment. Distance-matrix
/// spaces only know the endpoints, so the spacing becomes the longest edge.
pub fn hausdorff_content_estimate(
    space: &MetricSpace,
    points: &[usize],
    edges: &[(usize, usize)],
    resolution: f64,
) -> Result<ContentEstimate> {
    if !(resolution > 0.0) {
        return Err(param("resolution", format!("need resolution > 0, got {resolution}")));
    }
    for &p in points.iter().chain(edges.iter().flat_map(|(a, b)| [a, b])) {
        space.check_index(p)?;
    }
    let mut nodes: Vec<usize> = points.to_vec();
    nodes.extend(edges.iter().flat_map(|&(a, b)| [a, b]));
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.is_empty() {
        return Ok(ContentEstimate {
            lower: 0.0,
            upper: 0.0,
            resolution,
        });
    }
    let pos = |p: usize| nodes.binary_search(&p).unwrap();
    let mut uf: Vec<usize> = (0..nodes.len()).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut uf, pos(a)), find(&mut uf, pos(b)));
        uf[ra] = rb;
    }
    let comp: Vec<usize> = (0..nodes.len()).map(|i| find(&mut uf, i)).collect();
    let length: f64 = edges.iter().map(|&(a, b)| space.dist(a, b)).sum();

    match space.norm() {
        Some(norm) => {
            let total_len: f64 = length.max(f64::MIN_POSITIVE);
            let step = total_len / MAX_EDGE_SAMPLES as f64;
            let mut coords: Vec<Vec<f64>> = nodes.iter().map(|&p| space.point(p).unwrap().to_vec()).collect();
            let mut component = comp.clone();
            let mut spacing: f64 = 0.0;
            for &(a, b) in edges {
                let (pa, pb) = (space.point(a).unwrap(), space.point(b).unwrap());
                let len = space.dist(a, b);
                let pieces = (len / step).ceil().max(1.0) as usize;
                spacing = spacing.max(len / pieces as f64);
                for k in 1..pieces {
                    let t = k as f64 / pieces as f64;
                    coords.push(pa.iter().zip(pb).map(|(x, y)| x + t * (y - x)).collect());
                    component.push(comp[pos(a)]);
                }
            }
            let dist = move |i: usize, j: usize| norm.dist(&coords[i], &coords[j]);
            let set = SampledSet {
                len: component.len(),
                dist: &dist,
                component,
                spacing,
                length: (!edges.is_empty() && points.iter().all(|p| edges.iter().any(|&(a, b)| a == *p || b == *p)))
                    .then_some(length),
            };
            Ok(set.estimate(resolution))
        }
        None => {
            let spacing = edges.iter().map(|&(a, b)| space.dist(a, b)).fold(0.0, f64::max);
            let dist = |i: usize, j: usize| space.dist(nodes[i], nodes[j]);
            let set = SampledSet {
                len: nodes.len(),
                dist: &dist,
                component: comp,
                spacing,
                length: None,
            };
            Ok(set.estimate(resolution))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal;
    use crate::metric::Norm;

    fn path_edges(n: usize) -> Vec<(usize, usize)> {
        (0..n - 1).map(|i| (i, i + 1)).collect()
    }

    #[test]
    fn segment_content_is_length() {
        let s = fractal::segment(65).unwrap().space;
        let est = hausdorff_content_estimate(&s, &[], &path_edges(65), 0.01).unwrap();
        assert_eq!(est.lower, 1.0);
        assert!(est.upper >= 1.0 && est.upper <= 1.05, "{est:?}");
    }

    #[test]
    fn tripod_bracket() {
        let t = fractal::tripod_path_metric(31).unwrap().space;
        // legs share the center point 0 and run outward
        let mut edges = Vec::new();
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                let d = t.dist(i, j);
                if d < 1.5 / 30.0 && d > 0.0 {
                    edges.push((i, j));
                }
            }
        }
        let est = hausdorff_content_estimate(&t, &[], &edges, 0.01).unwrap();
        assert!((est.lower - 2.0).abs() < 1e-9, "{est:?}");
        assert!(est.upper >= 2.0 - 1e-9 && est.upper <= 3.0, "{est:?}");
    }

    #[test]
    fn empty_set() {
        let s = fractal::segment(5).unwrap().space;
        let est = hausdorff_content_estimate(&s, &[], &[], 0.1).unwrap();
        assert_eq!((est.lower, est.upper), (0.0, 0.0));
        assert!(hausdorff_content_estimate(&s, &[0], &[], 0.0).is_err());
    }

    #[test]
    fn separated_segments_add_up() {
        let rows: Vec<Vec<f64>> = (0..=10)
            .map(|i| vec![i as f64 / 10.0])
            .chain((0..=10).map(|i| vec![10.0 + i as f64 / 10.0]))
            .collect();
        let s = MetricSpace::from_coords(&rows, Norm::Euclidean).unwrap();
        let mut edges = path_edges(11);
        edges.extend((11..21).map(|i| (i, i + 1)));
        let est = hausdorff_content_estimate(&s, &[], &edges, 0.01).unwrap();
        assert!((est.lower - 2.0).abs() < 1e-12, "{est:?}");
        assert!(est.upper <= 2.1);
    }

    #[test]
    fn upper_is_monotone_in_resolution() {
        let k = fractal::koch(3, 60.0).unwrap().space;
        let edges = path_edges(k.len());
        let mut last = f64::INFINITY;
        for r in [0.5, 0.1, 0.02, 0.004] {
            let est = hausdorff_content_estimate(&k, &[], &edges, r).unwrap();
            assert!(est.upper <= last + 1e-12);
            assert!(est.lower <= est.upper);
            last = est.upper;
        }
    }
}
