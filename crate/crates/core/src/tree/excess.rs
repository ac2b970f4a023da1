//! Flattened traversals and the excess d(Q) of each cube.
//!
//! For a cube Q, λ(Q) is the set of maximal parameter intervals on which the
//! tour stays inside the union of Q's balls. Cubes are grouped by
//! generation (depth in the cube tree), and γ_g replaces the tour by its
//! chord on every interval of every generation-g cube. Then
//!
//!   d(Q) = Σ_{I ∈ λ(Q)} ℓ(γ_{g+1}|_I) − ℓ(γ_g|_I),
//!
//! which is a path length minus the chord between its endpoints, so it is
//! nonnegative, and summing over all cubes telescopes to at most the length
//! of the tour inside the top cubes.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::cubes::{CoreBall, CubeTree};
use crate::error::{param, Result};
use crate::metric::{golden_section_min, MetricSpace, Norm};
use crate::tree::graph::TreeGraph;
use crate::tree::tour::{Ambient, TourStep, Traversal};

/// Intervals closer than this are merged.
const MERGE_GAP: f64 = 1e-12;
const BISECT_STEPS: usize = 60;
const REL_ROUNDING: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeExcess {
    pub cube: usize,
    pub level: i32,
    pub generation: usize,
    /// λ(Q) as tour-parameter intervals.
    pub intervals: Vec<(f64, f64)>,
    /// ℓ(γ_g) on λ(Q): the sum of chord lengths.
    pub flat_length: f64,
    /// ℓ(γ_{g+1}) on λ(Q).
    pub refined_length: f64,
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    pub rows: Vec<CubeExcess>,
    pub total: f64,
    /// 2·ℋ¹(Γ ∩ Q₀): tour length inside the top-generation cubes.
    pub bound: f64,
    pub min_d: f64,
    pub holds: bool,
}

/// Where the segment from `p` to `q` (fraction s ∈ [0, 1]) lies strictly
/// inside the ball around `c` of radius `rho`, in the base norm.
fn segment_ball_interval(norm: Norm, p: &[f64], q: &[f64], c: &[f64], rho: f64) -> Option<(f64, f64)> {
    let at = |s: f64| -> Vec<f64> { p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect() };
    let g = |s: f64| norm.dist(&at(s), c);
    let smin = match norm {
        Norm::Euclidean => {
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..p.len() {
                let e = q[k] - p[k];
                num += (c[k] - p[k]) * e;
                den += e * e;
            }
            if den > 0.0 {
                (num / den).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }
        _ => golden_section_min(g, 0.0, 1.0, 1e-13).0,
    };
    if g(smin) >= rho {
        return None;
    }
    let crossing = |mut inside: f64, mut outside: f64| {
        for _ in 0..BISECT_STEPS {
            let mid = 0.5 * (inside + outside);
            if g(mid) < rho {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lo = if g(0.0) < rho { 0.0 } else { crossing(smin, 0.0) };
    let hi = if g(1.0) < rho { 1.0 } else { crossing(smin, 1.0) };
    if g(0.0) == rho || g(1.0) == rho {
        debug!("tour vertex on a ball boundary; treated as outside");
    }
    Some((lo, hi))
}

/// Tour parameters of one step inside a ball.
pub(crate) fn step_ball_intervals(amb: &Ambient, step: &TourStep, ball: &CoreBall, out: &mut Vec<(f64, f64)>) {
    let (u, v) = (amb.point(step.from), amb.point(step.to));
    let c = amb.point(ball.center);
    let rho = ball.radius;
    let half = step.length / 2.0;
    if half <= 0.0 {
        return;
    }
    let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    let base_half = amb.norm.dist(u, &mid);
    // up from u: height s·half must stay below rho
    if amb.norm.dist(u, c) - base_half < rho {
        if let Some((a, b)) = segment_ball_interval(amb.norm, u, &mid, c, rho) {
            let b = b.min(rho / half);
            if a < b {
                out.push((step.start + a * half, step.start + b * half));
            }
        }
    }
    // down to v: height (1 − s)·half
    if amb.norm.dist(v, c) - base_half < rho {
        if let Some((a, b)) = segment_ball_interval(amb.norm, &mid, v, c, rho) {
            let a = a.max(1.0 - rho / half);
            if a < b {
                out.push((step.start + half + a * half, step.start + half + b * half));
            }
        }
    }
}

pub(crate) fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 + MERGE_GAP => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// refined − flat, with differences within summation rounding of the
/// flat length read as 0.
fn excess(refined: f64, flat: f64) -> f64 {
    let d = refined - flat;
    if d.abs() <= REL_ROUNDING * flat {
        0.0
    } else {
        d
    }
}

/// Computes λ(Q) and d(Q) for every cube with level below `max_level`.
pub fn flatten_and_excess(
    space: &MetricSpace,
    tree: &TreeGraph,
    tour: &Traversal,
    cubes: &CubeTree,
    max_level: i32,
) -> Result<ExcessReport> {
    if tour.steps.is_empty() {
        return Err(param("tour", "tour has no steps"));
    }
    let ids: Vec<usize> = cubes.cubes.iter().filter(|q| q.level < max_level).map(|q| q.id).collect();
    if ids.is_empty() {
        return Err(param("max_level", format!("no cubes below level {max_level}")));
    }
    let mut generation = vec![usize::MAX; cubes.cubes.len()];
    for &id in &ids {
        let mut g = 0;
        let mut p = cubes.cubes[id].parent;
        while let Some(q) = p {
            g += 1;
            p = cubes.cubes[q].parent;
        }
        generation[id] = g;
    }
    let mut touched: Vec<usize> = tree.nodes.clone();
    for &id in &ids {
        touched.extend(cubes.cubes[id].balls.iter().map(|b| b.center));
    }
    let amb = Ambient::of(space, &touched);

    let intervals: Vec<Vec<(f64, f64)>> = ids
        .iter()
        .map(|&id| {
            let mut iv = Vec::new();
            for ball in &cubes.cubes[id].balls {
                for st in &tour.steps {
                    step_ball_intervals(&amb, st, ball, &mut iv);
                }
            }
            merge(iv)
        })
        .collect();
    let slot: std::collections::HashMap<usize, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();

    let chord = |a: f64, b: f64| amb.dist(&tour.point_at(&amb, a), &tour.point_at(&amb, b));
    let mut rows = Vec::with_capacity(ids.len());
    for (k, &id) in ids.iter().enumerate() {
        let cube = &cubes.cubes[id];
        let own = &intervals[k];
        let mut refined: Vec<f64> = own.iter().map(|&(a, b)| b - a).collect();
        for &child in &cube.children {
            let Some(&ck) = slot.get(&child) else { continue };
            for &(a, b) in &intervals[ck] {
                let m = 0.5 * (a + b);
                if let Some(i) = own.iter().position(|&(x, y)| x <= m && m <= y) {
                    refined[i] -= (b - a) - chord(a, b);
                }
            }
        }
        let flat_length: f64 = own.iter().map(|&(a, b)| chord(a, b)).sum();
        let refined_length: f64 = refined.iter().sum();
        rows.push(CubeExcess {
            cube: id,
            level: cube.level,
            generation: generation[id],
            intervals: own.clone(),
            flat_length,
            refined_length,
            d: excess(refined_length, flat_length),
        });
    }
    let total: f64 = rows.iter().map(|r| r.d).sum();
    let bound: f64 = rows
        .iter()
        .filter(|r| r.generation == 0)
        .flat_map(|r| r.intervals.iter().map(|&(a, b)| b - a))
        .sum();
    let min_d = rows.iter().map(|r| r.d).fold(f64::INFINITY, f64::min);
    Ok(ExcessReport {
        holds: min_d >= -1e-12 && total <= bound + 1e-9,
        rows,
        total,
        bound,
        min_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal;
    use crate::nets::NetHierarchy;
    use crate::tree::tour::euler_tour;

    fn run(space: &MetricSpace, m: f64, n0: i32, c: f64) -> ExcessReport {
        let top = CubeTree::covering_level(space.diameter(), m, c);
        let h = NetHierarchy::build(space, m, top, n0, 0).unwrap();
        let cubes = CubeTree::build(space, &h, c).unwrap();
        let tree = TreeGraph::build(space, &h, n0).unwrap();
        let tour = euler_tour(&tree).unwrap();
        flatten_and_excess(space, &tree, &tour, &cubes, n0).unwrap()
    }

    #[test]
    fn segment_interval_closed_form() {
        let iv = segment_ball_interval(Norm::Euclidean, &[0.0, 0.0], &[1.0, 0.0], &[0.5, 0.0], 0.25).unwrap();
        assert!((iv.0 - 0.25).abs() < 1e-12 && (iv.1 - 0.75).abs() < 1e-12);
        let iv = segment_ball_interval(Norm::Sup, &[0.0, 0.0], &[1.0, 0.0], &[0.5, 0.1], 0.25).unwrap();
        assert!((iv.0 - 0.25).abs() < 1e-9 && (iv.1 - 0.75).abs() < 1e-9);
        assert!(segment_ball_interval(Norm::L1, &[0.0, 0.0], &[1.0, 0.0], &[0.5, 0.3], 0.25).is_none());
    }

    #[test]
    fn antenna_telescopes() {
        let a = fractal::generate_antenna(0.25, 5).unwrap().space;
        let rep = run(&a, 4.0, 3, 0.1);
        assert!(rep.holds, "total {} bound {} min {}", rep.total, rep.bound, rep.min_d);
        assert!(rep.total > 0.0);
    }

    #[test]
    fn segment_has_no_excess_at_top() {
        let s = fractal::segment(257).unwrap().space;
        let rep = run(&s, 4.0, 3, 0.1);
        assert!(rep.holds);
        assert!(rep.min_d >= -1e-12);
    }
}
