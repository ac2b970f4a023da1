//! Greedy spanning trees on a net and the length-versus-points check.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::metric::MetricSpace;
use crate::nets::NetHierarchy;

/// Relative slack when comparing edge lengths to their bounds.
const REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    /// Length of the detour arc standing in for the edge: 2·length.
    pub detour_length: f64,
}

/// Spanning tree on X_{n₀} whose edges are replaced by detour arcs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeGraph {
    pub n0: i32,
    #[serde(rename = "M")]
    pub m: f64,
    /// Net point indices; the first one is the root.
    pub nodes: Vec<usize>,
    /// In attachment order; `v` is the newly attached node.
    pub edges: Vec<TreeEdge>,
    pub total_length: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TreeReport {
    pub connected: bool,
    pub acyclic: bool,
    pub max_edge_over_scale: f64,
    pub max_detour_over_scale: f64,
    pub violations: Vec<String>,
}

impl TreeReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl TreeGraph {
    /// Prim-style greedy tree on X_{n₀}: repeatedly attach the unattached
    /// net point closest to the attached set (ties to the lower index).
    ///
    /// Fails when an attaching edge exceeds 2M⁻ⁿ⁰, which means the sample is
    /// too sparse (or disconnected) at that scale.
    pub fn build(space: &MetricSpace, hier: &NetHierarchy, n0: i32) -> Result<TreeGraph> {
        Self::build_with(space, hier, n0, true)
    }

    /// As [`build`](Self::build); `enforce_scale = false` skips the
    /// requirement 4M⁻ⁿ⁰ < diam/4, which only matters for the length
    /// estimates.
    pub fn build_with(space: &MetricSpace, hier: &NetHierarchy, n0: i32, enforce_scale: bool) -> Result<TreeGraph> {
        let net = hier
            .level(n0)
            .ok_or_else(|| param("n0", format!("level {n0} outside {}..={}", hier.n_min, hier.n_max)))?;
        let scale = hier.scale(n0);
        let diam = space.diameter_of(net);
        if enforce_scale && !(4.0 * scale < diam / 4.0) {
            return Err(param(
                "n0",
                format!("need 4M^-n0 = {} below diam/4 = {}", 4.0 * scale, diam / 4.0),
            ));
        }
        let k = net.len();
        let mut attached = vec![false; k];
        let mut best = vec![f64::INFINITY; k];
        let mut from = vec![0usize; k];
        attached[0] = true;
        for a in 1..k {
            best[a] = space.dist(net[0], net[a]);
        }
        let mut edges = Vec::with_capacity(k - 1);
        for _ in 1..k {
            let mut pick: Option<usize> = None;
            for a in 0..k {
                if attached[a] {
                    continue;
                }
                pick = match pick {
                    None => Some(a),
                    Some(p) if best[a] < best[p] || (best[a] == best[p] && net[a] < net[p]) => Some(a),
                    keep => keep,
                };
            }
            let a = pick.unwrap();
            let length = best[a];
            if length > 2.0 * scale * (1.0 + REL_TOL) {
                return Err(Error::Sampling(format!(
                    "attaching point {} needs an edge of {length}, above 2M^-n0 = {}",
                    net[a],
                    2.0 * scale
                )));
            }
            attached[a] = true;
            edges.push(TreeEdge {
                u: net[from[a]],
                v: net[a],
                length,
                detour_length: 2.0 * length,
            });
            for b in 0..k {
                if !attached[b] {
                    let d = space.dist(net[a], net[b]);
                    if d < best[b] {
                        best[b] = d;
                        from[b] = a;
                    }
                }
            }
        }
        let total_length = edges.iter().map(|e| e.detour_length).sum();
        Ok(TreeGraph {
            n0,
            m: hier.m,
            nodes: net.to_vec(),
            edges,
            total_length,
        })
    }

    pub fn scale(&self) -> f64 {
        self.m.powi(-self.n0)
    }

    /// Position of a point index within `nodes`.
    pub fn node_position(&self, p: usize) -> Option<usize> {
        self.nodes.iter().position(|&q| q == p)
    }

    /// Per node position: (neighbor position, edge index), in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let pos: std::collections::HashMap<usize, usize> = self.nodes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            let (a, b) = (pos[&edge.u], pos[&edge.v]);
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        adj
    }

    /// Connectivity, acyclicity and the per-edge bounds.
    pub fn check(&self) -> TreeReport {
        let scale = self.scale();
        let mut rep = TreeReport::default();
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        if !self.nodes.is_empty() {
            seen[0] = true;
        }
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        rep.connected = seen.iter().all(|&s| s);
        rep.acyclic = rep.connected && self.edges.len() + 1 == self.nodes.len();
        if !rep.connected {
            rep.violations.push("tree is disconnected".into());
        }
        if !rep.acyclic {
            rep.violations.push(format!("{} edges on {} nodes", self.edges.len(), self.nodes.len()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            rep.max_edge_over_scale = rep.max_edge_over_scale.max(e.length / scale);
            rep.max_detour_over_scale = rep.max_detour_over_scale.max(e.detour_length / scale);
            if e.length > 2.0 * scale * (1.0 + REL_TOL) {
                rep.violations.push(format!("edge {i} longer than 2M^-n0"));
            }
            if e.detour_length > 2.0 * e.length * (1.0 + REL_TOL) || e.detour_length > 8.0 * scale * (1.0 + REL_TOL) {
                rep.violations.push(format!("edge {i} detour above its bound"));
            }
        }
        rep
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LengthPointsReport {
    pub x: usize,
    pub r: f64,
    /// Upper estimate of the tree length inside B(x, r/2).
    pub length: f64,
    pub net_points: usize,
    pub bound: f64,
    pub holds: bool,
}

/// Checks ℋ¹(Γ ∩ B(x, r/2)) ≤ 8M⁻ⁿ⁰·#(X_{n₀} ∩ B(x, r)).
///
/// Every arc lies within 2M⁻ⁿ⁰ of its endpoints, so only arcs with an
/// endpoint in B(x, r/2 + 2M⁻ⁿ⁰) can meet the half ball; their full detour
/// lengths bound the left side from above.
pub fn length_points_check(tree: &TreeGraph, space: &MetricSpace, x: usize, r: f64) -> Result<LengthPointsReport> {
    let scale = tree.scale();
    if tree.node_position(x).is_none() {
        return Err(param("x", format!("point {x} is not in X_n0")));
    }
    let diam = space.diameter_of(&tree.nodes);
    if !(r > 4.0 * scale && r < diam / 4.0) {
        return Err(param(
            "r",
            format!("need 4M^-n0 = {} < r < diam/4 = {}, got {r}", 4.0 * scale, diam / 4.0),
        ));
    }
    let reach = r / 2.0 + 2.0 * scale;
    let length: f64 = tree
        .edges
        .iter()
        .filter(|e| space.dist(x, e.u) < reach || space.dist(x, e.v) < reach)
        .map(|e| e.detour_length)
        .sum();
    let net_points = tree.nodes.iter().filter(|&&p| space.dist(x, p) < r).count();
    let bound = 8.0 * scale * net_points as f64;
    Ok(LengthPointsReport {
        x,
        r,
        length,
        net_points,
        bound,
        holds: length <= bound,
    })
}
