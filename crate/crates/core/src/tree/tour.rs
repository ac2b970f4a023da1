//! Depth-first double traversal of a tree and its ambient realization.
//!
//! Each tree edge (u, v) stands for a detour arc: from u straight up to an
//! apex above the midpoint of u and v, at height d(u, v) in a coordinate of
//! its own, then down to v. Ambient distances combine the base norm with
//! the extra coordinates by taking the maximum, so each half of the arc has
//! length d(u, v) and the tour parameter is arc length.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metric::{MetricSpace, Norm};
use crate::tree::graph::TreeGraph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourStep {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
    /// Tour parameter at which the step starts.
    pub start: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    pub steps: Vec<TourStep>,
    /// Times each tree edge is traversed.
    pub multiplicity: Vec<u32>,
    /// Sum of the step lengths in tour order.
    pub length: f64,
}

/// Depth-first tour from the tree's root, children in edge order.
pub fn euler_tour(tree: &TreeGraph) -> Result<Traversal> {
    let n = tree.nodes.len();
    if n == 0 {
        return Err(param("tree", "tree has no nodes"));
    }
    let adj = tree.adjacency();
    let mut steps = Vec::with_capacity(2 * tree.edges.len());
    let mut multiplicity = vec![0u32; tree.edges.len()];
    let mut visited = vec![false; n];
    visited[0] = true;
    // (node, next adjacency slot, edge used to enter)
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(0, 0, None)];
    let mut t = 0.0;
    let mut push = |steps: &mut Vec<TourStep>, e: usize, a: usize, b: usize, t: &mut f64| {
        let length = tree.edges[e].detour_length;
        steps.push(TourStep {
            edge: e,
            from: tree.nodes[a],
            to: tree.nodes[b],
            start: *t,
            length,
        });
        multiplicity[e] += 1;
        *t += length;
    };
    while let Some(top) = stack.last_mut() {
        let (v, slot, enter) = *top;
        if slot < adj[v].len() {
            top.1 += 1;
            let (w, e) = adj[v][slot];
            if !visited[w] {
                visited[w] = true;
                push(&mut steps, e, v, w, &mut t);
                stack.push((w, 0, Some(e)));
            }
        } else {
            stack.pop();
            if let (Some(e), Some(&(parent, _, _))) = (enter, stack.last()) {
                push(&mut steps, e, v, parent, &mut t);
            }
        }
    }
    if visited.iter().any(|&s| !s) {
        return Err(param("tree", "tree is disconnected"));
    }
    Ok(Traversal {
        steps,
        multiplicity,
        length: t,
    })
}

impl Traversal {
    /// Visited point indices, starting and ending at the root.
    pub fn node_sequence(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.steps.iter().map(|s| s.from).collect();
        if let Some(last) = self.steps.last() {
            out.push(last.to);
        }
        out
    }
}

/// A point on the realized tour: a base point plus an optional height in
/// the extra coordinate of one edge.
#[derive(Clone, Debug, PartialEq)]
pub struct TourPoint {
    pub base: Vec<f64>,
    pub lift: Option<(usize, f64)>,
}

/// Ambient coordinates of the sample points a tour touches.
#[derive(Clone, Debug)]
pub struct Ambient {
    pub norm: Norm,
    coords: std::collections::HashMap<usize, Vec<f64>>,
}

impl Ambient {
    /// Coordinates for `points`. Coordinate spaces use their own; distance
    /// matrices use each point's distances to `points` under the sup norm,
    /// isometric on that set.
    pub fn of(space: &MetricSpace, points: &[usize]) -> Ambient {
        let mut pts = points.to_vec();
        pts.sort_unstable();
        pts.dedup();
        match space.norm() {
            Some(norm) => Ambient {
                norm,
                coords: pts.iter().map(|&p| (p, space.point(p).unwrap().to_vec())).collect(),
            },
            None => Ambient {
                norm: Norm::Sup,
                coords: pts.iter().map(|&p| (p, pts.iter().map(|&q| space.dist(p, q)).collect())).collect(),
            },
        }
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.coords[&p]
    }

    pub fn dist(&self, a: &TourPoint, b: &TourPoint) -> f64 {
        let base = self.norm.dist(&a.base, &b.base);
        let lift = match (a.lift, b.lift) {
            (Some((e, h)), Some((f, k))) if e == f => (h - k).abs(),
            (Some((_, h)), Some((_, k))) => h.max(k),
            (Some((_, h)), None) | (None, Some((_, h))) => h,
            (None, None) => 0.0,
        };
        base.max(lift)
    }

    /// Point at fraction `s` of a step; the apex sits at `s = ½`.
    pub fn at(&self, step: &TourStep, s: f64) -> TourPoint {
        let (u, v) = (self.point(step.from), self.point(step.to));
        let half = step.length / 2.0;
        let (base, h) = if s <= 0.5 {
            let w = 2.0 * s;
            (u.iter().zip(v).map(|(a, b)| a + w * 0.5 * (b - a)).collect::<Vec<f64>>(), w * half)
        } else {
            let w = 2.0 * (1.0 - s);
            (v.iter().zip(u).map(|(a, b)| a + w * 0.5 * (b - a)).collect::<Vec<f64>>(), w * half)
        };
        TourPoint {
            base,
            lift: (h > 0.0).then_some((step.edge, h)),
        }
    }
}

impl Traversal {
    /// Tour point at parameter `t`.
    pub fn point_at(&self, amb: &Ambient, t: f64) -> TourPoint {
        let k = self.steps.partition_point(|s| s.start + s.length <= t).min(self.steps.len() - 1);
        let step = &self.steps[k];
        let s = if step.length > 0.0 { ((t - step.start) / step.length).clamp(0.0, 1.0) } else { 0.0 };
        amb.at(step, s)
    }

    /// Tour vertices with one extra coordinate per edge appended: base
    /// point, apex, base point, and so on.
    pub fn materialize(&self, amb: &Ambient, edges: usize) -> Vec<Vec<f64>> {
        let lift = |p: TourPoint| {
            let mut v = p.base;
            let mut extra = vec![0.0; edges];
            if let Some((e, h)) = p.lift {
                extra[e] = h;
            }
            v.extend(extra);
            v
        };
        let mut out = Vec::with_capacity(2 * self.steps.len() + 1);
        for st in &self.steps {
            out.push(lift(amb.at(st, 0.0)));
            out.push(lift(amb.at(st, 0.5)));
        }
        if let Some(st) = self.steps.last() {
            out.push(lift(amb.at(st, 1.0)));
        }
        out
    }
}
