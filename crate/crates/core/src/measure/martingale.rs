//! Bad cubes and the weight functions that pack them.
//!
//! Γ is the realized tree: one detour arc per edge, parameterized by arc
//! length. Γ ∩ R is the part of Γ inside the union of R's core balls, kept
//! as parameter intervals per edge, so ℋ¹(Γ ∩ R) is a sum of interval
//! lengths. A cube is bad when the certified lower content bound of Γ ∩ R
//! reaches (1 + Kβ)·diam R.
//!
//! For each bad Q the weight w_Q starts as mass diam Q on Q. A bad R inside
//! Q hands its mass to the maximal bad cubes S strictly inside it and to the
//! remainder G(R), in proportion to diam S and ℋ¹(G(R)).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cubes::CubeTree;
use crate::error::{param, Result};
use crate::measure::content::{ContentEstimate, SampledSet};
use crate::metric::MetricSpace;
use crate::tree::excess::{merge, step_ball_intervals};
use crate::tree::graph::TreeGraph;
use crate::tree::tour::{Ambient, TourStep};

/// Relative slack for the weight bounds.
const TOL: f64 = 1e-9;
/// Samples per cube diameter when estimating content.
const SAMPLES_PER_DIAM: f64 = 32.0;
const MAX_SAMPLES: f64 = 4096.0;

/// One maximal parameter interval of an edge arc, local to the edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub edge: usize,
    pub a: f64,
    pub b: f64,
}

/// The tree's arcs cut by every cube below the tree level.
pub struct TreeTrace {
    amb: Ambient,
    steps: Vec<TourStep>,
    pieces: HashMap<usize, Vec<Piece>>,
    /// ℋ¹(Γ): the summed detour lengths.
    pub length: f64,
}

impl TreeTrace {
    pub fn new(space: &MetricSpace, tree: &TreeGraph, cubes: &CubeTree) -> Result<TreeTrace> {
        if tree.edges.is_empty() {
            return Err(param("tree", "tree has no edges"));
        }
        let ids: Vec<usize> = cubes.cubes.iter().filter(|q| q.level < tree.n0).map(|q| q.id).collect();
        let mut touched = tree.nodes.clone();
        for &id in &ids {
            touched.extend(cubes.cubes[id].balls.iter().map(|b| b.center));
        }
        let amb = Ambient::of(space, &touched);
        let steps: Vec<TourStep> = tree
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| TourStep {
                edge: e,
                from: edge.u,
                to: edge.v,
                start: 0.0,
                length: edge.detour_length,
            })
            .collect();
        let mut pieces = HashMap::new();
        for id in ids {
            let mut out = Vec::new();
            for st in &steps {
                let mut iv = Vec::new();
                for ball in &cubes.cubes[id].balls {
                    step_ball_intervals(&amb, st, ball, &mut iv);
                }
                out.extend(merge(iv).into_iter().map(|(a, b)| Piece { edge: st.edge, a, b }));
            }
            pieces.insert(id, out);
        }
        Ok(TreeTrace {
            amb,
            steps,
            pieces,
            length: tree.total_length,
        })
    }

    pub fn pieces(&self, cube: usize) -> Option<&[Piece]> {
        self.pieces.get(&cube).map(|v| v.as_slice())
    }

    /// ℋ¹(Γ ∩ R).
    pub fn length_in(&self, cube: usize) -> f64 {
        self.pieces.get(&cube).map_or(0.0, |p| p.iter().map(|q| q.b - q.a).sum())
    }

    /// ℋ¹ of the part of Γ ∩ R outside every cube in `holes`.
    pub fn length_outside(&self, cube: usize, holes: &[usize]) -> f64 {
        let Some(own) = self.pieces.get(&cube) else { return 0.0 };
        let mut removed = 0.0;
        for p in own {
            let cut: Vec<(f64, f64)> = holes
                .iter()
                .filter_map(|h| self.pieces.get(h))
                .flatten()
                .filter(|q| q.edge == p.edge)
                .filter_map(|q| {
                    let (a, b) = (q.a.max(p.a), q.b.min(p.b));
                    (a < b).then_some((a, b))
                })
                .collect();
            removed += merge(cut).iter().map(|(a, b)| b - a).sum::<f64>();
        }
        (self.length_in(cube) - removed).max(0.0)
    }

    /// Content bracket of Γ ∩ R from samples along its pieces.
    pub fn content(&self, cube: usize, diam: f64) -> ContentEstimate {
        let own = self.pieces.get(&cube).map(|v| v.as_slice()).unwrap_or(&[]);
        let total: f64 = own.iter().map(|p| p.b - p.a).sum();
        // a one-point cube still meets arcs; size the samples by their length
        let scale = if diam > 0.0 { diam } else { total };
        let resolution = scale / 16.0;
        if own.is_empty() || total <= 0.0 {
            return ContentEstimate {
                lower: 0.0,
                upper: 0.0,
                resolution,
            };
        }
        let h = (scale / SAMPLES_PER_DIAM).max(total / MAX_SAMPLES);
        // pieces sharing a tree node belong to one component
        let mut uf: Vec<usize> = (0..own.len()).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut at_node: HashMap<usize, usize> = HashMap::new();
        for (k, p) in own.iter().enumerate() {
            let st = &self.steps[p.edge];
            let ends = [
                (p.a <= 1e-12 * st.length).then_some(st.from),
                (p.b >= st.length * (1.0 - 1e-12)).then_some(st.to),
            ];
            for node in ends.into_iter().flatten() {
                match at_node.get(&node) {
                    Some(&other) => {
                        let (x, y) = (find(&mut uf, k), find(&mut uf, other));
                        uf[x] = y;
                    }
                    None => {
                        at_node.insert(node, k);
                    }
                }
            }
        }
        let mut points = Vec::new();
        let mut component = Vec::new();
        let mut spacing: f64 = 0.0;
        for (k, p) in own.iter().enumerate() {
            let st = &self.steps[p.edge];
            let n = ((p.b - p.a) / h).ceil().max(1.0) as usize;
            let step = (p.b - p.a) / n as f64;
            spacing = spacing.max(step);
            let c = find(&mut uf, k);
            for i in 0..=n {
                let t = if i == n { p.b } else { p.a + i as f64 * step };
                points.push(self.amb.at(st, t / st.length));
                component.push(c);
            }
        }
        let dist = |i: usize, j: usize| self.amb.dist(&points[i], &points[j]);
        SampledSet {
            len: points.len(),
            dist: &dist,
            component,
            spacing,
            length: Some(total),
        }
        .estimate(resolution)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadMark {
    pub cube: usize,
    pub level: i32,
    pub diam: f64,
    pub content: ContentEstimate,
    /// ℋ¹(Γ ∩ R).
    pub length: f64,
    /// lower / diam − (1 + Kβ); nonnegative exactly for bad cubes.
    pub margin: f64,
    pub bad: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadMarks {
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
    pub marks: Vec<BadMark>,
}

impl BadMarks {
    pub fn is_bad(&self, cube: usize) -> bool {
        self.marks.iter().any(|m| m.cube == cube && m.bad)
    }

    pub fn bad_cubes(&self) -> Vec<usize> {
        self.marks.iter().filter(|m| m.bad).map(|m| m.cube).collect()
    }
}

/// Marks R bad when the certified lower content of Γ ∩ R is at least
/// (1 + Kβ)·diam R. Only cubes above the tree level are considered.
pub fn mark_bad_cubes(trace: &TreeTrace, cubes: &CubeTree, k: f64, beta: f64) -> Result<BadMarks> {
    if !(k > 0.0 && beta > 0.0) {
        return Err(param("K", format!("need K, beta > 0, got K = {k}, beta = {beta}")));
    }
    let factor = 1.0 + k * beta;
    let mut ids: Vec<usize> = trace.pieces.keys().copied().collect();
    ids.sort_unstable();
    let marks = ids
        .into_iter()
        .map(|id| {
            let cube = &cubes.cubes[id];
            let content = trace.content(id, cube.diam);
            let margin = if cube.diam > 0.0 { content.lower / cube.diam - factor } else { f64::NEG_INFINITY };
            BadMark {
                cube: id,
                level: cube.level,
                diam: cube.diam,
                content,
                length: trace.length_in(id),
                margin,
                bad: cube.diam > 0.0 && content.lower >= factor * cube.diam,
            }
        })
        .collect();
    Ok(BadMarks { k, beta, marks })
}

/// Splits the mass `w` of a bad cube among its maximal bad subcubes (by
/// diameter) and its good part (by length). Returns the subcube masses and
/// the good-part mass, or `None` when both weights vanish.
pub fn refine(w: f64, sub_diams: &[f64], good_length: f64) -> Option<(Vec<f64>, f64)> {
    let denom: f64 = sub_diams.iter().sum::<f64>() + good_length;
    if !(denom > 0.0) {
        return None;
    }
    let subs: Vec<f64> = sub_diams.iter().map(|d| w * d / denom).collect();
    Some((subs, w * good_length / denom))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// A bad cube S one bad generation below its parent region.
    Cube,
    /// G(R): Γ ∩ R outside the maximal bad cubes inside R.
    Good,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// The bad cube Q whose weight this is.
    pub owner: usize,
    pub kind: RegionKind,
    /// S for cube regions, R for good parts.
    pub cube: usize,
    pub mass: f64,
    /// ℋ¹ of the region's part of Γ.
    pub length: f64,
    /// Bad cubes containing the region, minus k(Q).
    pub depth: u32,
    /// (1 + Kβ)^−depth.
    pub bound: f64,
    /// mass / length.
    pub density: f64,
    /// mass / diam S, for cube regions.
    pub diam_ratio: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
    pub regions: Vec<Region>,
    /// k(Q) for every marked cube.
    pub bad_ancestors: Vec<(usize, u32)>,
    /// Cubes whose refinement had a zero denominator.
    pub degenerate: Vec<usize>,
    /// Largest |Σ final masses − diam Q| over bad Q.
    pub conservation_error: f64,
    /// Σ_{Q bad} β·diam Q.
    pub packing_sum: f64,
    /// (2/K)·ℋ¹(Γ).
    pub packing_bound: f64,
    pub packing_holds: bool,
    pub bounds_hold: bool,
}

/// Maximal bad cubes strictly inside `id`.
fn maximal_bad_below(cubes: &CubeTree, marks: &BadMarks, id: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack: Vec<usize> = cubes.cubes[id].children.clone();
    while let Some(q) = stack.pop() {
        if marks.is_bad(q) {
            out.push(q);
        } else {
            stack.extend(cubes.cubes[q].children.iter().copied());
        }
    }
    out.sort_unstable();
    out
}

/// Builds w_Q for every bad Q and checks the per-region bounds and the
/// packing inequality. With no bad cubes the root carries the single
/// weight diam Q₀ on all of Γ.
pub fn martingale_weights(trace: &TreeTrace, cubes: &CubeTree, marks: &BadMarks) -> Result<WeightReport> {
    let factor = 1.0 + marks.k * marks.beta;
    let bad = marks.bad_cubes();
    let mut k_of: HashMap<usize, u32> = HashMap::new();
    for m in &marks.marks {
        let mut k = 0;
        let mut p = cubes.cubes[m.cube].parent;
        while let Some(q) = p {
            if marks.is_bad(q) {
                k += 1;
            }
            p = cubes.cubes[q].parent;
        }
        k_of.insert(m.cube, k);
    }
    let mut regions = Vec::new();
    let mut degenerate = Vec::new();
    let mut conservation_error: f64 = 0.0;

    if bad.is_empty() {
        if let Some(root) = cubes.root() {
            let d = cubes.cubes[root].diam;
            let length = trace.length_in(root);
            regions.push(Region {
                owner: root,
                kind: RegionKind::Good,
                cube: root,
                mass: d,
                length,
                depth: 0,
                bound: 1.0,
                density: if length > 0.0 { d / length } else { 0.0 },
                diam_ratio: None,
                holds: true,
            });
        }
    }

    for &q in &bad {
        let kq = k_of[&q];
        let mut final_mass = 0.0;
        let mut stack: Vec<(usize, f64)> = vec![(q, cubes.cubes[q].diam)];
        while let Some((r, w)) = stack.pop() {
            let subs = maximal_bad_below(cubes, marks, r);
            let diams: Vec<f64> = subs.iter().map(|&s| cubes.cubes[s].diam).collect();
            let good = trace.length_outside(r, &subs);
            let Some((sub_mass, good_mass)) = refine(w, &diams, good) else {
                degenerate.push(r);
                final_mass += w;
                continue;
            };
            let depth = k_of[&r] + 1 - kq;
            let bound = factor.powi(-(depth as i32));
            let density = if good > 0.0 { good_mass / good } else { 0.0 };
            regions.push(Region {
                owner: q,
                kind: RegionKind::Good,
                cube: r,
                mass: good_mass,
                length: good,
                depth,
                bound,
                density,
                diam_ratio: None,
                holds: density <= bound * (1.0 + TOL),
            });
            final_mass += good_mass;
            for ((&s, &ds), &ws) in subs.iter().zip(&diams).zip(&sub_mass) {
                let ls = trace.length_in(s);
                let ds_bound = factor.powi(-((k_of[&s] - kq) as i32));
                let depth = k_of[&s] + 1 - kq;
                let bound = factor.powi(-(depth as i32));
                let density = if ls > 0.0 { ws / ls } else { f64::INFINITY };
                let ratio = ws / ds;
                regions.push(Region {
                    owner: q,
                    kind: RegionKind::Cube,
                    cube: s,
                    mass: ws,
                    length: ls,
                    depth,
                    bound,
                    density,
                    diam_ratio: Some(ratio),
                    holds: density <= bound * (1.0 + TOL) && ratio <= ds_bound * (1.0 + TOL),
                });
                stack.push((s, ws));
            }
        }
        let d = cubes.cubes[q].diam;
        conservation_error = conservation_error.max((final_mass - d).abs());
    }

    let packing_sum: f64 = bad.iter().map(|&q| marks.beta * cubes.cubes[q].diam).sum();
    let packing_bound = 2.0 / marks.k * trace.length;
    let mut bad_ancestors: Vec<(usize, u32)> = k_of.into_iter().collect();
    bad_ancestors.sort_unstable();
    Ok(WeightReport {
        k: marks.k,
        beta: marks.beta,
        bounds_hold: regions.iter().all(|r| r.holds),
        regions,
        bad_ancestors,
        degenerate,
        conservation_error,
        packing_sum,
        packing_bound,
        packing_holds: packing_sum <= packing_bound * (1.0 + TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal;
    use crate::nets::NetHierarchy;

    fn setup(space: &MetricSpace, m: f64, n0: i32) -> (CubeTree, TreeGraph) {
        let top = CubeTree::covering_level(space.diameter(), m, 0.1);
        let h = NetHierarchy::build(space, m, top, n0, 0).unwrap();
        let cubes = CubeTree::build(space, &h, 0.1).unwrap();
        let tree = TreeGraph::build(space, &h, n0).unwrap();
        (cubes, tree)
    }

    #[test]
    fn refine_matches_hand_split() {
        let (subs, good) = refine(2.0, &[0.5, 0.3], 0.2).unwrap();
        assert!((subs[0] - 1.0).abs() < 1e-15 && (subs[1] - 0.6).abs() < 1e-15);
        assert!((good - 0.4).abs() < 1e-15);
        assert!(refine(1.0, &[], 0.0).is_none());
    }

    #[test]
    fn antenna_bounds_and_packing() {
        let a = fractal::generate_antenna(0.25, 5).unwrap().space;
        let (cubes, tree) = setup(&a, 4.0, 3);
        let trace = TreeTrace::new(&a, &tree, &cubes).unwrap();
        for kb in [0.05, 0.1] {
            let marks = mark_bad_cubes(&trace, &cubes, 1.0, kb).unwrap();
            for m in &marks.marks {
                assert!(m.content.lower <= m.length + 1e-9);
            }
            let rep = martingale_weights(&trace, &cubes, &marks).unwrap();
            assert!(rep.packing_holds);
            assert!(rep.conservation_error < 1e-9, "{}", rep.conservation_error);
        }
    }

    #[test]
    fn large_factor_marks_nothing() {
        let a = fractal::generate_antenna(0.25, 5).unwrap().space;
        let (cubes, tree) = setup(&a, 4.0, 3);
        let trace = TreeTrace::new(&a, &tree, &cubes).unwrap();
        let marks = mark_bad_cubes(&trace, &cubes, 1.0, 2.0).unwrap();
        assert!(marks.bad_cubes().is_empty());
        let rep = martingale_weights(&trace, &cubes, &marks).unwrap();
        assert_eq!(rep.regions.len(), 1);
        assert_eq!(rep.regions[0].mass, cubes.cubes[cubes.root().unwrap()].diam);
    }
}
