//! Schul cores built from a net hierarchy.
//!
//! Every net point x ∈ X_n carries a core ball c·B(x, M⁻ⁿ). The cube Q_B of
//! a level-n ball is the union of all core balls at levels ≥ n that can be
//! reached from it by a chain of pairwise intersecting balls. A finest-level
//! point j born at level b_j contributes, at level n, its largest available
//! ball, of radius c·M^-max(n, b_j); smaller balls of the same point lie
//! inside it and never change the closure.
//!
//! Radii only grow as levels get coarser, so the closures are the connected
//! components of a ball-intersection graph whose edge set only grows. One
//! union-find pass from the finest level to the coarsest yields every level's
//! components. Ambient balls in a normed space (and in l∞ for matrix spaces)
//! intersect exactly when the centers are closer than the sum of radii.

use std::collections::{HashMap, HashSet, VecDeque};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metric::MetricSpace;
use crate::nets::NetHierarchy;

/// One ball of a core: center index and radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreBall {
    pub center: usize,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub id: usize,
    pub level: i32,
    pub center: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Sample points lying in the union of the core's balls, sorted.
    pub members: Vec<usize>,
    pub diam: f64,
    /// The balls whose union is the cube.
    #[serde(default)]
    pub balls: Vec<CoreBall>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeTree {
    #[serde(rename = "M")]
    pub m: f64,
    pub c: f64,
    pub n_min: i32,
    pub n_max: i32,
    pub cubes: Vec<Cube>,
    /// Set when two net points of one level ended up in the same core; the
    /// later one is then not given a cube of its own.
    #[serde(default)]
    pub merged_centers: Vec<(i32, usize, usize)>,
}

fn dsu_find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl CubeTree {
    /// Builds the cores of every level of `hier`.
    pub fn build(space: &MetricSpace, hier: &NetHierarchy, c: f64) -> Result<CubeTree> {
        if !(c > 0.0 && c < 0.125) {
            return Err(param("c", format!("core fraction must lie in (0, 1/8), got {c}")));
        }
        let m = hier.m;
        if m <= 2.0 {
            return Err(param("M", format!("cores need M > 2, got {m}")));
        }
        if m < 4.0 {
            warn!("M = {m} is below the desk-scale floor of 4");
        }
        let (n_min, n_max) = (hier.n_min, hier.n_max);
        let nlev = (n_max - n_min + 1) as usize;
        let finest = hier.finest();
        let k = finest.len();
        let birth: Vec<i32> = finest.iter().map(|&j| hier.birth[j].expect("finest net point has a birth level")).collect();
        let radius = |pos: usize, n: i32| c * m.powi(-(n.max(birth[pos])));

        // union-find from finest to coarsest, snapshotting roots per level
        let mut uf: Vec<usize> = (0..k).collect();
        let mut snapshots = vec![Vec::new(); nlev];
        for n in (n_min..=n_max).rev() {
            let active: Vec<usize> = (0..k).filter(|&p| birth[p] <= n).collect();
            let is_active = |p: usize| birth[p] <= n;
            for &a in &active {
                let ra = radius(a, n);
                for b in 0..k {
                    // inactive pairs kept their radii from the level below
                    if b == a || (is_active(b) && b < a) {
                        continue;
                    }
                    if n < n_max && !is_active(a) && !is_active(b) {
                        continue;
                    }
                    if space.dist(finest[a], finest[b]) < ra + radius(b, n) {
                        let (x, y) = (dsu_find(&mut uf, a), dsu_find(&mut uf, b));
                        if x != y {
                            uf[x.max(y)] = x.min(y);
                        }
                    }
                }
            }
            snapshots[(n - n_min) as usize] = (0..k).map(|p| dsu_find(&mut uf, p)).collect::<Vec<_>>();
        }

        let pos_of: HashMap<usize, usize> = finest.iter().enumerate().map(|(p, &j)| (j, p)).collect();

        // cubes per level, coarse to fine; root -> cube id
        let mut cubes: Vec<Cube> = Vec::new();
        let mut root_to_cube: Vec<HashMap<usize, usize>> = vec![HashMap::new(); nlev];
        let mut merged = Vec::new();
        for n in n_min..=n_max {
            let li = (n - n_min) as usize;
            let snap = &snapshots[li];
            let mut comp_balls: HashMap<usize, Vec<usize>> = HashMap::new();
            for p in 0..k {
                comp_balls.entry(snap[p]).or_default().push(p);
            }
            for &x in hier.level(n).unwrap() {
                let root = snap[pos_of[&x]];
                if let Some(&other) = root_to_cube[li].get(&root) {
                    merged.push((n, cubes[other].center, x));
                    continue;
                }
                let id = cubes.len();
                root_to_cube[li].insert(root, id);
                let balls = comp_balls[&root]
                    .iter()
                    .map(|&p| CoreBall {
                        center: finest[p],
                        radius: radius(p, n),
                    })
                    .collect();
                cubes.push(Cube {
                    id,
                    level: n,
                    center: x,
                    parent: None,
                    children: Vec::new(),
                    members: Vec::new(),
                    diam: 0.0,
                    balls,
                });
            }
        }
        if !merged.is_empty() {
            warn!("{} net points share a core with another point of the same level", merged.len());
        }

        // membership: for each sample point, the finest level at which it
        // lies in each finest-net ball
        let lists: Vec<Vec<(usize, i32)>> = (0..space.len())
            .into_par_iter()
            .map(|q| {
                let mut out = Vec::new();
                for p in 0..k {
                    let d = space.dist(q, finest[p]);
                    if d >= radius(p, n_min) {
                        continue;
                    }
                    let mut t = n_max;
                    while d >= radius(p, t) {
                        t -= 1;
                    }
                    out.push((p, t));
                }
                out
            })
            .collect();
        for (q, list) in lists.iter().enumerate() {
            for n in n_min..=n_max {
                let li = (n - n_min) as usize;
                if let Some(&(p, _)) = list.iter().find(|&&(_, t)| t >= n) {
                    if let Some(&id) = root_to_cube[li].get(&snapshots[li][p]) {
                        cubes[id].members.push(q);
                    }
                }
            }
        }

        // parents: nearest coarser level whose component holds a cube
        for id in 0..cubes.len() {
            let (n, x) = (cubes[id].level, cubes[id].center);
            let p = pos_of[&x];
            let mut parent = None;
            for n2 in (n_min..n).rev() {
                let li = (n2 - n_min) as usize;
                if let Some(&pid) = root_to_cube[li].get(&snapshots[li][p]) {
                    parent = Some(pid);
                    break;
                }
            }
            cubes[id].parent = parent;
            if let Some(pid) = parent {
                cubes[pid].children.push(id);
            }
        }

        let diams: Vec<f64> = cubes.par_iter().map(|q| space.diameter_of(&q.members)).collect();
        for (q, d) in cubes.iter_mut().zip(diams) {
            q.diam = d;
        }

        Ok(CubeTree {
            m,
            c,
            n_min,
            n_max,
            cubes,
            merged_centers: merged,
        })
    }

    /// Largest level n whose core balls c·M⁻ⁿ exceed `diam`, so that a
    /// single ball at that level already holds the whole sample.
    pub fn covering_level(diam: f64, m: f64, c: f64) -> i32 {
        let mut n = ((c / diam.max(f64::MIN_POSITIVE)).ln() / m.ln()).floor() as i32;
        while c * m.powi(-n) <= diam {
            n -= 1;
        }
        while c * m.powi(-(n + 1)) > diam {
            n += 1;
        }
        n
    }

    pub fn core_radius(&self, n: i32) -> f64 {
        self.c * self.m.powi(-n)
    }

    pub fn level_ids(&self, n: i32) -> Vec<usize> {
        self.cubes.iter().filter(|q| q.level == n).map(|q| q.id).collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        self.cubes.iter().filter(|q| q.parent.is_none()).map(|q| q.id).collect()
    }

    /// The single coarsest cube when the hierarchy starts from one point.
    pub fn root(&self) -> Option<usize> {
        match self.roots().as_slice() {
            [r] => Some(*r),
            _ => None,
        }
    }

    /// Whether an ambient point lies in cube `id`, given its distance to an
    /// arbitrary sample point.
    pub fn contains_by(&self, id: usize, dist_to: impl Fn(usize) -> f64) -> bool {
        self.cubes[id].balls.iter().any(|b| dist_to(b.center) < b.radius)
    }

    /// All cubes whose members include `p`, coarse to fine.
    pub fn cubes_containing(&self, p: usize) -> Vec<usize> {
        self.cubes
            .iter()
            .filter(|q| q.members.binary_search(&p).is_ok())
            .map(|q| q.id)
            .collect()
    }

    /// Descendants of `id` at exactly `level`, following child links.
    pub fn descendants_at(&self, id: usize, level: i32) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(q) = stack.pop() {
            let cube = &self.cubes[q];
            if cube.level == level {
                out.push(q);
            } else if cube.level < level {
                stack.extend(cube.children.iter().copied());
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks disjoint-or-nested, roundness, coverage and the ball-chain
    /// bound.
    pub fn verify(&self, space: &MetricSpace) -> CoreReport {
        let mut report = CoreReport {
            cubes: self.cubes.len(),
            levels: (self.n_max - self.n_min + 1) as usize,
            ..Default::default()
        };
        let factor = 1.0 + 8.0 / self.m;

        // laminarity: along each point's cubes sorted by size, consecutive
        // cubes must be nested; transitivity covers every intersecting pair
        let mut per_point: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
        for q in &self.cubes {
            for &p in &q.members {
                per_point[p].push(q.id);
            }
        }
        let mut seen = HashSet::new();
        for list in &mut per_point {
            list.sort_by_key(|&id| (std::cmp::Reverse(self.cubes[id].members.len()), self.cubes[id].level, id));
            for w in list.windows(2) {
                if !seen.insert((w[0], w[1])) {
                    continue;
                }
                report.pairs_checked += 1;
                let (big, small) = (&self.cubes[w[0]].members, &self.cubes[w[1]].members);
                if !small.iter().all(|x| big.binary_search(x).is_ok()) {
                    report.violations.push(CoreViolation::Nesting { a: w[0], b: w[1] });
                }
            }
        }
        let nc = self.cubes.len();
        report.pairs_total = nc * nc.saturating_sub(1) / 2;

        for q in &self.cubes {
            let r = self.core_radius(q.level);
            let mut worst = 0.0f64;
            for &p in &q.members {
                let d = space.dist(q.center, p);
                worst = worst.max(d);
                if d >= factor * r {
                    report.violations.push(CoreViolation::Roundness {
                        cube: q.id,
                        point: p,
                        ratio: d / r,
                    });
                }
            }
            report.max_radius_ratio = report.max_radius_ratio.max(worst / r);
            report.max_diam_ratio = report.max_diam_ratio.max(q.diam / (2.0 * r));
            let pool: Vec<usize> = match q.parent {
                Some(pid) => self.cubes[pid].members.clone(),
                None => (0..space.len()).collect(),
            };
            for p in pool {
                if space.dist(q.center, p) < r && q.members.binary_search(&p).is_err() {
                    report.violations.push(CoreViolation::CoreBallEscapes { cube: q.id, point: p });
                }
            }
        }

        for n in self.n_min..=self.n_max {
            let scale = self.m.powi(-n);
            let centers: Vec<usize> = self.cubes.iter().filter(|q| q.level == n).map(|q| q.center).collect();
            let missing: Vec<usize> = (0..space.len())
                .into_par_iter()
                .filter(|&p| !centers.iter().any(|&x| space.dist(p, x) <= scale))
                .collect();
            report.coverage_checked += space.len();
            for p in missing {
                report.violations.push(CoreViolation::Coverage { level: n, point: p });
            }
        }

        let bound = 1.0 / (1.0 - 2.0 / self.m);
        for q in &self.cubes {
            let (worst, ok) = chain_ratio(space, &q.balls, q.center);
            report.chains_checked += 1;
            report.max_chain_ratio = report.max_chain_ratio.max(worst);
            if !ok || worst > bound * (1.0 + 1e-12) {
                report.chain_violations.push((q.id, worst));
            }
        }
        report
    }
}

/// Largest Σ diam / max diam along breadth-first paths from the center ball
/// through the ball-intersection graph. Returns (ratio, graph connected).
fn chain_ratio(space: &MetricSpace, balls: &[CoreBall], center: usize) -> (f64, bool) {
    let b = balls.len();
    let Some(start) = balls.iter().position(|x| x.center == center) else {
        return (f64::INFINITY, false);
    };
    let mut sum = vec![f64::NAN; b];
    let mut mx = vec![0.0; b];
    sum[start] = 2.0 * balls[start].radius;
    mx[start] = 2.0 * balls[start].radius;
    let mut queue = VecDeque::from([start]);
    let mut worst = 1.0f64;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..b {
            if !sum[v].is_nan() {
                continue;
            }
            if space.dist(balls[u].center, balls[v].center) < balls[u].radius + balls[v].radius {
                let dv = 2.0 * balls[v].radius;
                sum[v] = sum[u] + dv;
                mx[v] = mx[u].max(dv);
                worst = worst.max(sum[v] / mx[v]);
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    (worst, reached == b)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CoreReport {
    pub cubes: usize,
    pub levels: usize,
    pub pairs_total: usize,
    /// Intersecting pairs examined for nesting.
    pub pairs_checked: usize,
    pub coverage_checked: usize,
    pub chains_checked: usize,
    pub max_radius_ratio: f64,
    pub max_diam_ratio: f64,
    pub max_chain_ratio: f64,
    pub violations: Vec<CoreViolation>,
    /// Cubes whose breadth-first chains exceed 1/(1 - 2/M) times the largest ball.
    pub chain_violations: Vec<(usize, f64)>,
}

impl CoreReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreViolation {
    Nesting { a: usize, b: usize },
    Roundness { cube: usize, point: usize, ratio: f64 },
    CoreBallEscapes { cube: usize, point: usize },
    Coverage { level: i32, point: usize },
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
    fn two_far_points_give_disjoint_singletons() {
        let s = MetricSpace::from_coords(&[vec![0.0], vec![1.0]], Norm::Euclidean).unwrap();
        let h = NetHierarchy::build(&s, 10.0, 0, 2, 0).unwrap();
        let t = CubeTree::build(&s, &h, 0.1).unwrap();
        let lvl0 = t.level_ids(0);
        assert_eq!(lvl0.len(), 2);
        assert_eq!(t.cubes[lvl0[0]].members, vec![0]);
        assert_eq!(t.cubes[lvl0[1]].members, vec![1]);
        assert!(t.verify(&s).ok());
    }

    #[test]
    fn segment_tree_passes_all_checks() {
        let s = segment(200);
        let h = NetHierarchy::build(&s, 4.0, 0, 4, 0).unwrap();
        let t = CubeTree::build(&s, &h, 0.1).unwrap();
        let r = t.verify(&s);
        assert!(r.ok(), "{:?}", r.violations);
        assert!(r.max_radius_ratio < 1.0 + 8.0 / 4.0);
        for q in &t.cubes {
            if let Some(p) = q.parent {
                assert!(t.cubes[p].level < q.level);
            }
        }
    }

    #[test]
    fn rejects_large_core_fraction() {
        let s = segment(10);
        let h = NetHierarchy::build(&s, 4.0, 0, 2, 0).unwrap();
        assert!(CubeTree::build(&s, &h, 0.125).is_err());
        assert!(CubeTree::build(&s, &h, 0.0).is_err());
    }

    #[test]
    fn moved_member_is_reported() {
        let s = segment(200);
        let h = NetHierarchy::build(&s, 4.0, 0, 3, 0).unwrap();
        let mut t = CubeTree::build(&s, &h, 0.1).unwrap();
        let lvl = t.level_ids(2);
        let (a, b) = (lvl[0], lvl[1]);
        let p = t.cubes[a].members.pop().unwrap();
        t.cubes[b].members.push(p);
        t.cubes[b].members.sort_unstable();
        let r = t.verify(&s);
        assert!(r.violations.iter().any(|v| matches!(v, CoreViolation::Nesting { .. })));
    }
}
