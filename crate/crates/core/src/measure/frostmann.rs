//! Equal-split measures on every n₀-th generation of a net tree, and their
//! exponent.
//!
//! Core cubes leave gaps between them, so most cores have a single core n₀
//! levels below and an equal split over them hardly spreads mass. The
//! measure lives instead on the nearest-parent tree of the nets: each point
//! of X_{n+1} hangs below the closest point of X_n (itself when it is
//! already there), and the cube of (n, x) is everything below it. These
//! cubes partition the sample at every level.

use std::collections::HashMap;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metric::MetricSpace;
use crate::nets::NetHierarchy;

/// Upper end of the exponent search.
pub const S_MAX: f64 = 8.0;
const S_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetNode {
    pub id: usize,
    pub level: i32,
    pub center: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Nearest-parent tree over every level of a net hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetTree {
    #[serde(rename = "M")]
    pub m: f64,
    pub n_min: i32,
    pub n_max: i32,
    pub nodes: Vec<NetNode>,
}

impl NetTree {
    pub fn build(space: &MetricSpace, hier: &NetHierarchy) -> NetTree {
        let mut nodes: Vec<NetNode> = Vec::new();
        let mut prev: Vec<(usize, usize)> = Vec::new();
        for n in hier.n_min..=hier.n_max {
            let net = hier.level(n).unwrap();
            let parents: Vec<Option<usize>> = net
                .par_iter()
                .map(|&x| {
                    let mut best: Option<(f64, usize, usize)> = None;
                    for &(p, id) in &prev {
                        let d = space.dist(x, p);
                        if best.map_or(true, |(bd, bp, _)| d < bd || (d == bd && p < bp)) {
                            best = Some((d, p, id));
                        }
                    }
                    best.map(|b| b.2)
                })
                .collect();
            let mut here = Vec::with_capacity(net.len());
            for (&x, parent) in net.iter().zip(parents) {
                let id = nodes.len();
                nodes.push(NetNode {
                    id,
                    level: n,
                    center: x,
                    parent,
                    children: Vec::new(),
                });
                if let Some(p) = parent {
                    nodes[p].children.push(id);
                }
                here.push((x, id));
            }
            prev = here;
        }
        NetTree {
            m: hier.m,
            n_min: hier.n_min,
            n_max: hier.n_max,
            nodes,
        }
    }

    /// The single node of the coarsest level, if there is one.
    pub fn root(&self) -> Option<usize> {
        let top: Vec<&NetNode> = self.nodes.iter().filter(|q| q.level == self.n_min).collect();
        (top.len() == 1).then(|| top[0].id)
    }

    pub fn descendants_at(&self, id: usize, level: i32) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(q) = stack.pop() {
            let node = &self.nodes[q];
            if node.level == level {
                out.push(q);
            } else if node.level < level {
                stack.extend(node.children.iter().copied());
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassCube {
    pub id: usize,
    pub mass: f64,
    pub generation: u32,
    pub level: i32,
    /// mass = 1/denominator, while the product of child counts fits.
    pub denominator: Option<u128>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassDistribution {
    pub n0: u32,
    pub root: usize,
    pub cubes: Vec<MassCube>,
    /// Cubes above the deepest generation with no cube n₀ levels below.
    pub flagged: Vec<usize>,
    pub deepest_generation: u32,
}

impl MassDistribution {
    pub fn generation(&self, g: u32) -> impl Iterator<Item = &MassCube> {
        self.cubes.iter().filter(move |c| c.generation == g)
    }

    /// Largest |Σ child masses − parent mass| over internal cubes.
    pub fn conservation_error(&self, tree: &NetTree) -> f64 {
        let mass: HashMap<usize, &MassCube> = self.cubes.iter().map(|c| (c.id, c)).collect();
        let mut worst: f64 = 0.0;
        for c in &self.cubes {
            if c.generation == self.deepest_generation {
                continue;
            }
            let kids = tree.descendants_at(c.id, c.level + self.n0 as i32);
            if kids.is_empty() {
                continue;
            }
            let sum: f64 = kids.iter().map(|k| mass[k].mass).sum();
            worst = worst.max((sum - c.mass).abs());
        }
        worst
    }
}

/// μ(root) = 1 and each cube splits its mass equally among the cubes
/// n₀ levels below it.
pub fn build_frostmann(tree: &NetTree, n0: u32, root: usize) -> Result<MassDistribution> {
    if n0 == 0 {
        return Err(param("n0", "need n0 >= 1"));
    }
    let top = tree
        .nodes
        .get(root)
        .ok_or_else(|| param("root", format!("no cube {root}")))?;
    let step = n0 as i32;
    if top.level + 2 * step > tree.n_max {
        return Err(param(
            "n0",
            format!("levels {}..={} hold fewer than two generations below the root", top.level, tree.n_max),
        ));
    }
    let deepest = ((tree.n_max - top.level) / step) as u32;
    let mut cubes = vec![MassCube {
        id: root,
        mass: 1.0,
        generation: 0,
        level: top.level,
        denominator: Some(1),
    }];
    let mut flagged = Vec::new();
    let mut frontier = vec![0usize];
    for g in 1..=deepest {
        let mut next = Vec::new();
        for &slot in &frontier {
            let parent = cubes[slot].clone();
            let kids = tree.descendants_at(parent.id, parent.level + step);
            if kids.is_empty() {
                flagged.push(parent.id);
                continue;
            }
            let k = kids.len();
            let denominator = parent.denominator.and_then(|d| d.checked_mul(k as u128));
            let mass = denominator.map_or(parent.mass / k as f64, |d| 1.0 / d as f64);
            for id in kids {
                next.push(cubes.len());
                cubes.push(MassCube {
                    id,
                    mass,
                    generation: g,
                    level: parent.level + step,
                    denominator,
                });
            }
        }
        frontier = next;
    }
    if !flagged.is_empty() {
        warn!("{} cubes have nothing {n0} levels below them", flagged.len());
    }
    Ok(MassDistribution {
        n0,
        root,
        cubes,
        flagged,
        deepest_generation: deepest,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSample {
    pub x: usize,
    pub r: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmannFit {
    /// Largest s with μ(B(x, r)) ≤ C_cap·rˢ on every sample.
    pub s: f64,
    /// sup μ/rˢ at the returned s.
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C_cap")]
    pub c_cap: f64,
    /// Largest s for the bound that is tight at the largest radius.
    pub s_anchored: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub samples: Vec<BallSample>,
    pub warning: Option<String>,
}

/// μ(B(x, r)): the mass of deepest cubes whose center lies in the ball.
pub fn ball_mass(measure: &MassDistribution, tree: &NetTree, space: &MetricSpace, x: usize, r: f64) -> f64 {
    measure
        .generation(measure.deepest_generation)
        .filter(|c| space.dist(x, tree.nodes[c.id].center) < r)
        .map(|c| c.mass)
        .sum()
}

/// Largest s in [0, S_MAX] satisfying a predicate that holds up to some
/// threshold and fails beyond it.
fn largest(feasible: impl Fn(f64) -> bool) -> Option<f64> {
    if !feasible(0.0) {
        return None;
    }
    if feasible(S_MAX) {
        return Some(S_MAX);
    }
    let (mut a, mut b) = (0.0, S_MAX);
    while b - a > S_TOL {
        let mid = 0.5 * (a + b);
        if feasible(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(a)
}

/// Fits μ(B(x, r)) ≤ C·rˢ over sampled balls.
///
/// Centers are deepest cube centers and radii run log-uniformly over
/// [r_min, r_max]; each center is also evaluated at r_max. The exponent is
/// the largest s (to 1e-3) whose supremum ratio stays within `c_cap`.
/// Radii must stay at most 1 so that the ratio grows with s.
#[allow(clippy::too_many_arguments)]
pub fn frostmann_exponent(
    measure: &MassDistribution,
    tree: &NetTree,
    space: &MetricSpace,
    r_min: f64,
    r_max: f64,
    count: usize,
    c_cap: f64,
    seed: u64,
) -> Result<FrostmannFit> {
    if !(r_min > 0.0 && r_max >= 100.0 * r_min) {
        return Err(param("r_min", format!("radii {r_min}..{r_max} span less than two decades")));
    }
    if r_max > 1.0 {
        return Err(param("r_max", format!("radii above 1 are not supported, got {r_max}")));
    }
    if count == 0 {
        return Err(param("count", "need at least one sample"));
    }
    if !(c_cap > 0.0) {
        return Err(param("C_cap", format!("need a positive cap, got {c_cap}")));
    }
    let deep: Vec<usize> = measure.generation(measure.deepest_generation).map(|c| tree.nodes[c.id].center).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let mut pairs = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let x = deep[rng.gen_range(0..deep.len())];
        pairs.push((x, rng.gen_range(lo..hi).exp()));
        pairs.push((x, r_max));
    }
    let samples: Vec<BallSample> = pairs
        .par_iter()
        .map(|&(x, r)| BallSample {
            x,
            r,
            mass: ball_mass(measure, tree, space, x, r),
        })
        .collect();
    let c_at = |s: f64| samples.iter().map(|b| b.mass / b.r.powf(s)).fold(0.0, f64::max);
    let top = samples.iter().filter(|b| b.r == r_max).map(|b| b.mass).fold(0.0, f64::max);
    let s_anchored = largest(|s| samples.iter().all(|b| b.mass <= top * (b.r / r_max).powf(s) * (1.0 + 1e-12))).unwrap_or(0.0);

    let mut warning = None;
    let s = if deep.len() < 2 {
        warning = Some(format!("a single deepest cube puts no upper limit on s; reporting the search cap {S_MAX}"));
        S_MAX
    } else {
        match largest(|s| c_at(s) <= c_cap) {
            None => {
                warning = Some(format!("sup μ/r^0 already exceeds the cap {c_cap}"));
                0.0
            }
            Some(s) if s == S_MAX => {
                warning = Some(format!("exponent reached the search cap {S_MAX}"));
                s
            }
            Some(s) => s,
        }
    };
    Ok(FrostmannFit {
        s,
        c: c_at(s),
        c_cap,
        s_anchored,
        r_min,
        r_max,
        samples,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal;

    fn cubes_of(space: &MetricSpace, m: f64, depth: i32) -> NetTree {
        let h = NetHierarchy::build(space, m, -1, depth, 0).unwrap();
        NetTree::build(space, &h)
    }

    #[test]
    fn segment_split_is_exact() {
        let s = fractal::segment(257).unwrap().space;
        let t = cubes_of(&s, 4.0, 4);
        let root = t.root().unwrap();
        let mu = build_frostmann(&t, 2, root).unwrap();
        for g in 0..=mu.deepest_generation {
            let total: f64 = mu.generation(g).map(|c| c.mass).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(mu.conservation_error(&t) < 1e-12);
        for c in &mu.cubes {
            assert_eq!(c.mass, 1.0 / c.denominator.unwrap() as f64);
            assert!(c.mass > 0.0 && c.mass <= 1.0);
        }
    }

    #[test]
    fn segment_exponent_bounds() {
        let s = fractal::segment(4097).unwrap().space;
        let t = cubes_of(&s, 4.0, 6);
        let mu = build_frostmann(&t, 2, t.root().unwrap()).unwrap();
        let fit = frostmann_exponent(&mu, &t, &s, 4.0 * 4f64.powi(-6), 0.5, 300, 4.0, 1).unwrap();
        // endpoint cells are half size, so equal splitting concentrates mass there
        assert!(fit.s_anchored > 0.5 && fit.s_anchored < 1.0, "{}", fit.s_anchored);
        assert!(fit.c <= 4.0 + 1e-9 && fit.s >= fit.s_anchored, "{fit:?}");
    }

    #[test]
    fn shallow_hierarchy_rejected() {
        let s = fractal::segment(65).unwrap().space;
        let t = cubes_of(&s, 4.0, 2);
        assert!(build_frostmann(&t, 2, t.root().unwrap()).is_err());
        let t = cubes_of(&s, 4.0, 3);
        let mu = build_frostmann(&t, 2, t.root().unwrap()).unwrap();
        assert!(frostmann_exponent(&mu, &t, &s, 0.1, 0.5, 10, 100.0, 0).is_err());
    }

    #[test]
    fn four_way_tree_masses() {
        let mut nodes = Vec::new();
        let mut frontier = vec![0usize];
        nodes.push(NetNode { id: 0, level: 0, center: 0, parent: None, children: vec![] });
        for level in 1..=3 {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..4 {
                    let id = nodes.len();
                    nodes.push(NetNode { id, level, center: 0, parent: Some(p), children: vec![] });
                    nodes[p].children.push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        let t = NetTree { m: 4.0, n_min: 0, n_max: 3, nodes };
        let mu = build_frostmann(&t, 1, 0).unwrap();
        for c in &mu.cubes {
            assert_eq!(c.mass, 4f64.powi(-(c.generation as i32)));
        }
        assert_eq!(mu.generation(3).count(), 64);
    }
}
