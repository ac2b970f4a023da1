//! Certified antenna constants.
//!
//! Inside a ball, the ε-graph joins points at distance ≤ ε. A candidate
//! tripod is a branch vertex b plus three tips, each joined to b by its
//! breadth-first path (a leg). The triple certifies c when every tip stays
//! at least c·r away from the other two legs. The detector maximizes c over
//! a farthest-point sample of tips and branch points.
//!
//! Every step depends on the metric only through comparisons, so replacing
//! d by d^γ (with ε^γ and r^γ) certifies exactly c^γ.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::metric::{Ball, MetricSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntennaWitness {
    pub c: f64,
    /// Tip point indices; empty when no tripod was found.
    pub tips: Vec<usize>,
    /// Branch point index.
    pub branch: Option<usize>,
    /// `legs[k]` runs from the branch point to `tips[k]`.
    pub legs: Vec<Vec<usize>>,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AntennaOptions {
    /// Tip candidates, taken from a farthest-point order of the ball.
    pub tips: usize,
    /// Branch candidates, taken from the same order, plus the center.
    pub branches: usize,
    /// Drop points outside the center's component instead of failing.
    pub restrict_to_center_component: bool,
}

impl Default for AntennaOptions {
    fn default() -> Self {
        AntennaOptions {
            tips: 12,
            branches: 20,
            restrict_to_center_component: false,
        }
    }
}

/// Adjacency lists (ascending) of the ε-graph on `pts`, in local indices.
fn eps_graph(space: &MetricSpace, pts: &[usize], eps: f64) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            if space.dist(pts[a], pts[b]) <= eps {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Component label per vertex.
fn components(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut label = vec![usize::MAX; adj.len()];
    let mut next = 0;
    for s in 0..adj.len() {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

/// BFS parents from `root`; neighbors are visited in index order.
fn bfs(adj: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[root] = root;
    let mut q = VecDeque::from([root]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                q.push_back(w);
            }
        }
    }
    parent
}

fn leg(parent: &[usize], root: usize, tip: usize) -> Vec<usize> {
    let mut out = vec![tip];
    let mut v = tip;
    while v != root {
        v = parent[v];
        out.push(v);
    }
    out.reverse();
    out
}

/// Farthest-point order of local indices from `start`.
fn farthest_order(space: &MetricSpace, pts: &[usize], start: usize, count: usize) -> Vec<usize> {
    let mut mind = vec![f64::INFINITY; pts.len()];
    let mut order = vec![start];
    let mut cur = start;
    while order.len() < count.min(pts.len()) {
        let mut pick = (usize::MAX, -1.0);
        for a in 0..pts.len() {
            mind[a] = mind[a].min(space.dist(pts[cur], pts[a]));
            if mind[a] > pick.1 {
                pick = (a, mind[a]);
            }
        }
        if pick.1 <= 0.0 {
            break;
        }
        order.push(pick.0);
        cur = pick.0;
    }
    order
}

/// Largest edge of a minimum spanning tree of the points: the smallest ε
/// whose ε-graph is connected.
pub fn connectivity_scale(space: &MetricSpace, pts: &[usize]) -> f64 {
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    let mut inside = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut bottleneck = 0.0f64;
    for _ in 0..n {
        let mut v = usize::MAX;
        for a in 0..n {
            if !inside[a] && (v == usize::MAX || best[a] < best[v]) {
                v = a;
            }
        }
        inside[v] = true;
        bottleneck = bottleneck.max(best[v]);
        for a in 0..n {
            if !inside[a] {
                best[a] = best[a].min(space.dist(pts[v], pts[a]));
            }
        }
    }
    bottleneck
}

/// Antenna constant of a ball with default options.
pub fn antenna_constant(ball: &Ball, space: &MetricSpace, graph_scale: f64) -> Result<AntennaWitness> {
    antenna_constant_with(ball, space, graph_scale, &AntennaOptions::default())
}

pub fn antenna_constant_with(
    ball: &Ball,
    space: &MetricSpace,
    graph_scale: f64,
    opts: &AntennaOptions,
) -> Result<AntennaWitness> {
    if !(graph_scale > 0.0) {
        return Err(param("graph_scale", format!("must be positive, got {graph_scale}")));
    }
    let r = ball.radius;
    let none = AntennaWitness {
        c: 0.0,
        tips: Vec::new(),
        branch: None,
        legs: Vec::new(),
        r,
    };
    if ball.len() < 4 {
        return Ok(none);
    }
    let mut pts = ball.members.clone();
    let mut adj = eps_graph(space, &pts, graph_scale);
    let label = components(&adj);
    let count = label.iter().max().map_or(0, |m| m + 1);
    if count > 1 {
        if !opts.restrict_to_center_component {
            let mut comps = vec![Vec::new(); count];
            for (&p, &l) in pts.iter().zip(&label) {
                comps[l].push(p);
            }
            return Err(Error::Disconnected { components: comps });
        }
        let home = label[pts.binary_search(&ball.center).unwrap_or(0)];
        pts = pts.iter().zip(&label).filter(|(_, &l)| l == home).map(|(&p, _)| p).collect();
        if pts.len() < 4 {
            return Ok(none);
        }
        adj = eps_graph(space, &pts, graph_scale);
    }
    let start = pts.binary_search(&ball.center).unwrap_or(0);
    let order = farthest_order(space, &pts, start, opts.tips.max(opts.branches) + 1);
    let tips: Vec<usize> = order.iter().copied().filter(|&a| a != start).take(opts.tips).collect();
    let mut branches: Vec<usize> = order.iter().copied().take(opts.branches).collect();
    if !branches.contains(&start) {
        branches.push(start);
    }
    let mut best = (0.0f64, None::<(usize, [usize; 3])>);
    let nt = tips.len();
    for &b in &branches {
        let parent = bfs(&adj, b);
        let legs: Vec<Vec<usize>> = tips.iter().map(|&t| leg(&parent, b, t)).collect();
        // gap[t][u]: distance from tip t to the vertices of leg u
        let mut gap = vec![0.0; nt * nt];
        for t in 0..nt {
            for u in 0..nt {
                if t != u {
                    gap[t * nt + u] = legs[u]
                        .iter()
                        .map(|&v| space.dist(pts[tips[t]], pts[v]))
                        .fold(f64::INFINITY, f64::min);
                }
            }
        }
        for i in 0..nt {
            for j in i + 1..nt {
                for k in j + 1..nt {
                    let m = [
                        gap[i * nt + j],
                        gap[i * nt + k],
                        gap[j * nt + i],
                        gap[j * nt + k],
                        gap[k * nt + i],
                        gap[k * nt + j],
                    ]
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                    if m > best.0 {
                        best = (m, Some((b, [i, j, k])));
                    }
                }
            }
        }
    }
    let Some((b, tri)) = best.1 else {
        return Ok(none);
    };
    let parent = bfs(&adj, b);
    Ok(AntennaWitness {
        c: best.0 / r,
        tips: tri.iter().map(|&t| pts[tips[t]]).collect(),
        branch: Some(pts[b]),
        legs: tri
            .iter()
            .map(|&t| leg(&parent, b, tips[t]).into_iter().map(|v| pts[v]).collect())
            .collect(),
        r,
    })
}

impl AntennaWitness {
    /// Rechecks the witness: legs are ε-paths from the branch point, and
    /// every tip is at least c·r from the other legs.
    pub fn verify(&self, space: &MetricSpace, graph_scale: f64) -> bool {
        if self.tips.is_empty() {
            return self.c == 0.0;
        }
        let Some(b) = self.branch else { return false };
        for (k, l) in self.legs.iter().enumerate() {
            if l.first() != Some(&b) || l.last() != Some(&self.tips[k]) {
                return false;
            }
            if l.windows(2).any(|w| space.dist(w[0], w[1]) > graph_scale) {
                return false;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let d = self.legs[j]
                    .iter()
                    .map(|&v| space.dist(self.tips[i], v))
                    .fold(f64::INFINITY, f64::min);
                if d < self.c * self.r * (1.0 - 1e-12) {
                    return false;
                }
            }
        }
        true
    }
}
