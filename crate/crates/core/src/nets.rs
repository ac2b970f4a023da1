//! Nested maximal nets from a farthest-point ordering.
//!
//! One greedy farthest-point pass produces a permutation of the sample and
//! the insertion radius of every point (its distance to the points inserted
//! before it). Insertion radii never increase, so for any ε the prefix of
//! points with radius ≥ ε is a maximal ε-net: separated because each point
//! was at least ε from everything earlier, and maximal because the first
//! excluded point was the farthest remaining one and still closer than ε.
//! Taking prefixes at ε = M⁻ⁿ makes the nets nested, X_n ⊆ X_{n+1}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metric::MetricSpace;

/// Above this many points, the distance update runs on the rayon pool.
const PAR_THRESHOLD: usize = 4096;

/// A farthest-point ordering, truncated once the insertion radius drops
/// below the requested floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyOrder {
    pub order: Vec<usize>,
    /// `radii[k]` is the distance from `order[k]` to `order[..k]`; the first
    /// entry is infinite.
    #[serde(with = "inf_vec")]
    pub radii: Vec<f64>,
    /// Covering radius of the retained prefix: the largest distance from any
    /// point to the prefix (0 when every point is retained).
    pub cover: f64,
}

impl GreedyOrder {
    /// Runs farthest-point insertion from `start` until the next insertion
    /// radius would be `< floor`. Ties go to the lowest index.
    pub fn build(space: &MetricSpace, start: usize, floor: f64) -> Result<GreedyOrder> {
        space.check_index(start)?;
        let n = space.len();
        let mut min_d = vec![f64::INFINITY; n];
        let mut order = vec![start];
        let mut radii = vec![f64::INFINITY];
        let mut cur = start;
        loop {
            update(space, &mut min_d, cur);
            let (far, r) = argmax(&min_d);
            if order.len() == n || r < floor {
                let cover = if order.len() == n { 0.0 } else { r };
                return Ok(GreedyOrder { order, radii, cover });
            }
            order.push(far);
            radii.push(r);
            cur = far;
        }
    }

    /// Size of the ε-net prefix: points with insertion radius ≥ ε.
    pub fn net_size(&self, eps: f64) -> usize {
        // radii are nonincreasing
        self.radii.partition_point(|&r| r >= eps)
    }

    pub fn net(&self, eps: f64) -> &[usize] {
        &self.order[..self.net_size(eps)]
    }

    /// True when the prefix is guaranteed maximal at scale `eps`.
    pub fn resolves(&self, eps: f64) -> bool {
        self.cover < eps
    }
}

fn update(space: &MetricSpace, min_d: &mut [f64], cur: usize) {
    let f = |(j, m): (usize, &mut f64)| {
        let d = space.dist(cur, j);
        if d < *m {
            *m = d;
        }
    };
    if min_d.len() >= PAR_THRESHOLD {
        min_d.par_iter_mut().enumerate().for_each(f);
    } else {
        min_d.iter_mut().enumerate().for_each(f);
    }
}

fn argmax(v: &[f64]) -> (usize, f64) {
    let pick = |a: (usize, f64), b: (usize, f64)| {
        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
            b
        } else {
            a
        }
    };
    if v.len() >= PAR_THRESHOLD {
        v.par_iter()
            .enumerate()
            .map(|(i, &x)| (i, x))
            .reduce(|| (usize::MAX, f64::NEG_INFINITY), pick)
    } else {
        v.iter()
            .enumerate()
            .map(|(i, &x)| (i, x))
            .fold((usize::MAX, f64::NEG_INFINITY), pick)
    }
}

/// Nets X_n for n in `n_min..=n_max` at scales M⁻ⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetHierarchy {
    #[serde(rename = "M")]
    pub m: f64,
    pub n_min: i32,
    pub n_max: i32,
    /// Index of the starting point of the greedy pass.
    pub seed: usize,
    /// `levels[k]` is X_{n_min + k} in insertion order.
    pub levels: Vec<Vec<usize>>,
    /// Level at which each point first enters a net, if it ever does.
    pub birth: Vec<Option<i32>>,
}

impl NetHierarchy {
    /// Builds nets at every level of `n_min..=n_max`, starting the greedy
    /// pass from point `seed`.
    pub fn build(space: &MetricSpace, m: f64, n_min: i32, n_max: i32, seed: usize) -> Result<NetHierarchy> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(param("M", format!("must exceed 1, got {m}")));
        }
        if n_min > n_max {
            return Err(param("n_min", format!("n_min = {n_min} exceeds n_max = {n_max}")));
        }
        let finest = m.powi(-n_max);
        let greedy = GreedyOrder::build(space, seed, finest)?;
        let mut birth = vec![None; space.len()];
        let mut levels = Vec::with_capacity((n_max - n_min + 1) as usize);
        let mut prev = 0;
        for n in n_min..=n_max {
            let net = greedy.net(m.powi(-n)).to_vec();
            for &i in &net[prev..] {
                birth[i] = Some(n);
            }
            prev = net.len();
            levels.push(net);
        }
        Ok(NetHierarchy {
            m,
            n_min,
            n_max,
            seed,
            levels,
            birth,
        })
    }

    pub fn scale(&self, n: i32) -> f64 {
        self.m.powi(-n)
    }

    pub fn level(&self, n: i32) -> Option<&[usize]> {
        if n < self.n_min || n > self.n_max {
            return None;
        }
        Some(&self.levels[(n - self.n_min) as usize])
    }

    pub fn finest(&self) -> &[usize] {
        self.levels.last().expect("at least one level")
    }

    pub fn contains(&self, n: i32, i: usize) -> bool {
        matches!(self.birth.get(i), Some(Some(b)) if *b <= n)
    }

    /// Checks separation, maximality, and nesting at every level.
    pub fn verify(&self, space: &MetricSpace) -> NetReport {
        let mut report = NetReport::default();
        for n in self.n_min..=self.n_max {
            let eps = self.scale(n);
            let net = self.level(n).unwrap();
            for (a, &x) in net.iter().enumerate() {
                for &y in &net[a + 1..] {
                    report.pairs_checked += 1;
                    if space.dist(x, y) < eps {
                        report.violations.push(NetViolation::Separation { level: n, x, y });
                    }
                }
            }
            for p in 0..space.len() {
                report.points_checked += 1;
                // closed inequality here to avoid flapping on exact ties
                if !net.iter().any(|&x| space.dist(p, x) <= eps) {
                    report.violations.push(NetViolation::Maximality { level: n, point: p });
                }
            }
            if n > self.n_min {
                let coarse = self.level(n - 1).unwrap();
                let inner: std::collections::HashSet<usize> = net.iter().copied().collect();
                if coarse.iter().any(|x| !inner.contains(x)) {
                    report.violations.push(NetViolation::Nesting { level: n });
                }
            }
        }
        report
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NetReport {
    pub pairs_checked: usize,
    pub points_checked: usize,
    pub violations: Vec<NetViolation>,
}

impl NetReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetViolation {
    Separation { level: i32, x: usize, y: usize },
    Maximality { level: i32, point: usize },
    Nesting { level: i32 },
}

mod inf_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| if x.is_finite() { Some(*x) } else { None })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Norm;

    fn segment(n: usize) -> MetricSpace {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        MetricSpace::from_coords(&rows, Norm::Euclidean).unwrap()
    }

    #[test]
    fn quarter_net_on_101_points() {
        let s = segment(101);
        let h = NetHierarchy::build(&s, 2.0, 0, 2, 0).unwrap();
        let net = h.level(2).unwrap();
        assert_eq!(net, &[0, 100, 50, 25, 75]);
        assert!(h.verify(&s).ok());
    }

    #[test]
    fn one_point_space() {
        let s = MetricSpace::from_coords(&[vec![3.0, 4.0]], Norm::Sup).unwrap();
        let h = NetHierarchy::build(&s, 4.0, -2, 5, 0).unwrap();
        assert!(h.levels.iter().all(|l| l == &[0]));
    }

    #[test]
    fn coarse_level_is_single_point() {
        let s = segment(11);
        let h = NetHierarchy::build(&s, 4.0, -1, 3, 0).unwrap();
        assert_eq!(h.level(-1).unwrap(), &[0]);
        assert_eq!(h.level(0).unwrap(), &[0, 10]);
    }

    #[test]
    fn rejects_bad_m() {
        let s = segment(5);
        assert!(NetHierarchy::build(&s, 1.0, 0, 2, 0).is_err());
        assert!(NetHierarchy::build(&s, 2.0, 3, 2, 0).is_err());
    }

    #[test]
    fn greedy_cover_radius() {
        let s = segment(101);
        let g = GreedyOrder::build(&s, 0, 0.2).unwrap();
        assert_eq!(g.order, vec![0, 100, 50, 25, 75]);
        assert!((g.cover - 0.12).abs() < 1e-12);
        assert!(g.resolves(0.2));
    }
}
