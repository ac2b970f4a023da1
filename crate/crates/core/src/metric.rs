//! Finite metric spaces, their ambient embeddings, balls, and polygonal paths.
//!
//! A [`MetricSpace`] is either a point cloud with one of three norms or an
//! explicit distance matrix. Anything that needs ambient geometry (segments,
//! distances from points to curves) goes through an [`Embedding`]; distance
//! matrices are embedded with the finite Kuratowski map into `l_inf^N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Exhaustive triangle checks up to this many points; sampled above.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 300;
const SAMPLED_TRIPLES: usize = 100_000;
const METRIC_TOL: f64 = 1e-12;

/// Tolerance (in the segment parameter) for golden-section searches.
pub const GOLDEN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Sup,
    Euclidean,
    L1,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::Sup => "sup",
            Norm::Euclidean => "euclidean",
            Norm::L1 => "l1",
        }
    }

    pub fn parse(s: &str) -> Option<Norm> {
        match s {
            "sup" => Some(Norm::Sup),
            "euclidean" => Some(Norm::Euclidean),
            "l1" => Some(Norm::L1),
            _ => None,
        }
    }

    #[inline]
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Norm::Sup => a
                .iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
            Norm::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    /// Norm of `a - (p + t (q - p))`.
    #[inline]
    fn dist_to_param(self, z: &[f64], p: &[f64], q: &[f64], t: f64) -> f64 {
        let mut acc = 0.0f64;
        for k in 0..z.len() {
            let d = z[k] - (p[k] + t * (q[k] - p[k]));
            match self {
                Norm::Sup => acc = acc.max(d.abs()),
                Norm::Euclidean => acc += d * d,
                Norm::L1 => acc += d.abs(),
            }
        }
        if self == Norm::Euclidean {
            acc.sqrt()
        } else {
            acc
        }
    }

    /// Distance from `z` to the segment `[p, q]`.
    ///
    /// Closed form for the euclidean norm; golden-section search on the
    /// convex one-dimensional objective otherwise.
    pub fn point_segment_distance(self, z: &[f64], p: &[f64], q: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => {
                let mut pq2 = 0.0;
                let mut dot = 0.0;
                for k in 0..z.len() {
                    let e = q[k] - p[k];
                    pq2 += e * e;
                    dot += (z[k] - p[k]) * e;
                }
                let t = if pq2 > 0.0 {
                    (dot / pq2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                self.dist_to_param(z, p, q, t)
            }
            _ => {
                let f = |t: f64| self.dist_to_param(z, p, q, t);
                let (_, v) = golden_section_min(f, 0.0, 1.0, GOLDEN_TOL);
                v.min(self.dist(z, p)).min(self.dist(z, q))
            }
        }
    }
}

/// Minimizes a unimodal function on `[a, b]`; returns the argmin and value.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let ft = f(t);
    let (fa, fb) = (f(a), f(b));
    [(t, ft), (a, fa), (b, fb), (c, fc), (d, fd)]
        .into_iter()
        .fold((t, ft), |best, cand| if cand.1 < best.1 { cand } else { best })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    /// Row-major `n x dim` coordinates.
    Coordinates { coords: Vec<f64>, dim: usize, norm: Norm },
    /// Row-major `n x n` distances.
    Matrix { dist: Vec<f64> },
    /// The metric `d^gamma` of a base space, evaluated on demand.
    Power { base: Box<MetricSpace>, gamma: f64 },
}

/// A finite metric space on points `0..len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    n: usize,
    repr: Representation,
    labels: Option<Vec<String>>,
}

impl MetricSpace {
    pub fn from_coords(rows: &[Vec<f64>], norm: Norm) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidMetric("empty point set".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidMetric("points have zero coordinates".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Schema {
                    field: format!("points[{i}]"),
                    reason: format!("expected {dim} coordinates, found {}", r.len()),
                });
            }
            if let Some(k) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::Schema {
                    field: format!("points[{i}][{k}]"),
                    reason: "non-finite coordinate".into(),
                });
            }
            coords.extend_from_slice(r);
        }
        Ok(Self::from_flat(coords, dim, norm))
    }

    /// Builds from flat row-major coordinates without validation beyond shape.
    pub fn from_flat(coords: Vec<f64>, dim: usize, norm: Norm) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0);
        MetricSpace {
            n: coords.len() / dim,
            repr: Representation::Coordinates { coords, dim, norm },
            labels: None,
        }
    }

    /// Builds from a distance matrix and verifies the metric axioms.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMetric("empty distance matrix".into()));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Schema {
                    field: format!("matrix[{i}]"),
                    reason: format!("expected {n} entries, found {}", r.len()),
                });
            }
            dist.extend_from_slice(r);
        }
        let space = MetricSpace {
            n,
            repr: Representation::Matrix { dist },
            labels: None,
        };
        space.validate()?;
        Ok(space)
    }

    /// Wraps a flat matrix that is known to be a metric (e.g. produced from
    /// another valid metric). Still checked in debug builds.
    pub(crate) fn from_flat_matrix_unchecked(n: usize, dist: Vec<f64>) -> Self {
        assert_eq!(dist.len(), n * n);
        MetricSpace {
            n,
            repr: Representation::Matrix { dist },
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Schema {
                field: "labels".into(),
                reason: format!("expected {} labels, found {}", self.n, labels.len()),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// The coordinate norm, or `None` for matrix spaces.
    pub fn norm(&self) -> Option<Norm> {
        match self.repr {
            Representation::Coordinates { norm, .. } => Some(norm),
            Representation::Matrix { .. } | Representation::Power { .. } => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self.repr {
            Representation::Coordinates { dim, .. } => Some(dim),
            Representation::Matrix { .. } | Representation::Power { .. } => None,
        }
    }

    pub fn point(&self, i: usize) -> Option<&[f64]> {
        match &self.repr {
            Representation::Coordinates { coords, dim, .. } => Some(&coords[i * dim..(i + 1) * dim]),
            Representation::Matrix { .. } | Representation::Power { .. } => None,
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Representation::Coordinates { coords, dim, norm } => {
                let d = *dim;
                norm.dist(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d])
            }
            Representation::Matrix { dist } => dist[i * self.n + j],
            Representation::Power { base, gamma } => base.dist(i, j).powf(*gamma),
        }
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                len: self.n,
            })
        }
    }

    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(i, j);
                m[i * n + j] = d;
                m[j * n + i] = d;
            }
        }
        m
    }

    /// Maximum pairwise distance. Quadratic.
    pub fn diameter(&self) -> f64 {
        self.diameter_of(&(0..self.n).collect::<Vec<_>>())
    }

    pub fn diameter_of(&self, idx: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Checks zero diagonal, symmetry, nonnegativity, and the triangle
    /// inequality (exhaustively up to [`EXHAUSTIVE_TRIANGLE_LIMIT`] points,
    /// on sampled triples beyond).
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            let dii = self.dist(i, i);
            if dii.abs() > METRIC_TOL {
                return Err(Error::InvalidMetric(format!("d({i},{i}) = {dii} is not zero")));
            }
            for j in i + 1..n {
                let (a, b) = (self.dist(i, j), self.dist(j, i));
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {a} is not a nonnegative number")));
                }
                if (a - b).abs() > METRIC_TOL * a.max(1.0) {
                    return Err(Error::InvalidMetric(format!("asymmetric: d({i},{j}) = {a}, d({j},{i}) = {b}")));
                }
            }
        }
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let dik = self.dist(i, k);
            let sum = self.dist(i, j) + self.dist(j, k);
            if dik > sum + METRIC_TOL * dik.max(1.0) {
                Err(Error::Triangle { i, j, k, dik, sum })
            } else {
                Ok(())
            }
        };
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for i in 0..n {
                for k in i + 1..n {
                    for j in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961);
            for _ in 0..SAMPLED_TRIPLES {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                check(i, j, k)?;
            }
        }
        Ok(())
    }

    /// All points at distance strictly less than `radius` from `center`.
    pub fn ball(&self, center: usize, radius: f64) -> Result<Ball> {
        self.check_index(center)?;
        if !(radius > 0.0) {
            return Err(param("radius", format!("must be positive, got {radius}")));
        }
        let members = (0..self.n).filter(|&j| self.dist(center, j) < radius).collect();
        Ok(Ball {
            center,
            radius,
            members,
        })
    }

    /// The metric `d^gamma` on the same points, evaluated lazily.
    pub(crate) fn power(&self, gamma: f64) -> MetricSpace {
        let base = match &self.repr {
            Representation::Power { base, gamma: g } => {
                return MetricSpace {
                    n: self.n,
                    repr: Representation::Power {
                        base: base.clone(),
                        gamma: g * gamma,
                    },
                    labels: self.labels.clone(),
                }
            }
            _ => MetricSpace {
                labels: None,
                ..self.clone()
            },
        };
        MetricSpace {
            n: self.n,
            repr: Representation::Power {
                base: Box::new(base),
                gamma,
            },
            labels: self.labels.clone(),
        }
    }

    /// The same space with an explicit distance matrix.
    pub fn to_matrix(&self) -> MetricSpace {
        MetricSpace {
            n: self.n,
            repr: Representation::Matrix {
                dist: self.distance_matrix(),
            },
            labels: self.labels.clone(),
        }
    }

    /// Restricts the space to the given indices, in order.
    pub fn subspace(&self, idx: &[usize]) -> MetricSpace {
        match &self.repr {
            Representation::Coordinates { coords, dim, norm } => {
                let mut out = Vec::with_capacity(idx.len() * dim);
                for &i in idx {
                    out.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                }
                MetricSpace::from_flat(out, *dim, *norm)
            }
            Representation::Power { base, gamma } => MetricSpace {
                n: idx.len(),
                repr: Representation::Power {
                    base: Box::new(base.subspace(idx)),
                    gamma: *gamma,
                },
                labels: None,
            },
            Representation::Matrix { .. } => {
                let k = idx.len();
                let mut d = vec![0.0; k * k];
                for a in 0..k {
                    for b in 0..k {
                        d[a * k + b] = self.dist(idx[a], idx[b]);
                    }
                }
                MetricSpace::from_flat_matrix_unchecked(k, d)
            }
        }
    }
}

/// The finite Kuratowski map: point `i` goes to row `i` of the distance
/// matrix, with the sup norm. An isometry for every finite metric space.
pub fn kuratowski_embed(space: &MetricSpace) -> Result<MetricSpace> {
    space.validate()?;
    Ok(MetricSpace::from_flat(space.distance_matrix(), space.len(), Norm::Sup))
}

/// Ambient coordinates for a space: its own coordinates, or the Kuratowski
/// rows for a distance matrix.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub norm: Norm,
}

impl Embedding {
    pub fn of(space: &MetricSpace) -> Embedding {
        match space.representation() {
            Representation::Coordinates { coords, dim, norm } => Embedding {
                dim: *dim,
                coords: coords.clone(),
                norm: *norm,
            },
            Representation::Matrix { dist } => Embedding {
                dim: space.len(),
                coords: dist.clone(),
                norm: Norm::Sup,
            },
            Representation::Power { .. } => Embedding {
                dim: space.len(),
                coords: space.distance_matrix(),
                norm: Norm::Sup,
            },
        }
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn path(&self, idx: &[usize]) -> PolygonalPath {
        PolygonalPath::new(idx.iter().map(|&i| self.point(i).to_vec()).collect(), self.norm)
    }
}

/// An open ball `B(center, radius)` traced on the sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    /// Sorted indices at distance `< radius`.
    pub members: Vec<usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A piecewise-linear path through ambient vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonalPath {
    vertices: Vec<Vec<f64>>,
    norm: Norm,
    length: f64,
    gap: f64,
}

impl PolygonalPath {
    pub fn new(vertices: Vec<Vec<f64>>, norm: Norm) -> Self {
        assert!(!vertices.is_empty(), "a path needs at least one vertex");
        let length = vertices.windows(2).map(|w| norm.dist(&w[0], &w[1])).sum();
        let gap = norm.dist(&vertices[0], &vertices[vertices.len() - 1]);
        PolygonalPath {
            vertices,
            norm,
            length,
            gap,
        }
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Length minus endpoint gap.
    pub fn deviation(&self) -> f64 {
        (self.length - self.gap).max(0.0)
    }

    /// Distance from an ambient point to the path.
    pub fn distance_to(&self, z: &[f64]) -> f64 {
        self.distance_to_below(z, f64::INFINITY)
    }

    /// Like [`distance_to`](Self::distance_to) but may stop early once the
    /// running minimum drops to `floor` or below.
    pub fn distance_to_below(&self, z: &[f64], floor: f64) -> f64 {
        let norm = self.norm;
        let vd: Vec<f64> = self.vertices.iter().map(|v| norm.dist(z, v)).collect();
        let mut best = vd.iter().cloned().fold(f64::INFINITY, f64::min);
        if best <= floor || best == 0.0 {
            return best;
        }
        for (s, w) in self.vertices.windows(2).enumerate() {
            let seg = norm.dist(&w[0], &w[1]);
            // dist(z, seg) >= max(d(z,p), d(z,q)) - |p - q|
            if vd[s].max(vd[s + 1]) - seg >= best {
                continue;
            }
            let d = norm.point_segment_distance(z, &w[0], &w[1]);
            if d < best {
                best = d;
                if best <= floor {
                    break;
                }
            }
        }
        best
    }
}

/// `sup_{z in points} dist(z, path)`: the covering term of geodesic
/// deviation. Empty point sets give 0.
pub fn cover_distance(points: &[usize], path: &PolygonalPath, emb: &Embedding) -> f64 {
    let mut worst = 0.0f64;
    for &z in points {
        // only points that could raise the supremum need an exact distance
        let d = path.distance_to_below(emb.point(z), worst);
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Deviation (length minus gap) of the sub-path on vertices `i..=j`.
pub fn subarc_deviation(path: &PolygonalPath, i: usize, j: usize) -> Result<f64> {
    let n = path.vertices.len();
    if i >= j {
        return Err(param("i", format!("need i < j, got i = {i}, j = {j}")));
    }
    if j >= n {
        return Err(Error::Index { index: j, len: n });
    }
    let sub = PolygonalPath::new(path.vertices[i..=j].to_vec(), path.norm);
    Ok(sub.deviation())
}

/// Point-set JSON document.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointSetDoc {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl PointSetDoc {
    pub fn from_space(space: &MetricSpace) -> PointSetDoc {
        let (metric, points, matrix) = match space.representation() {
            Representation::Coordinates { coords, dim, norm } => (
                norm.name().to_string(),
                Some(coords.chunks(*dim).map(|r| r.to_vec()).collect()),
                None,
            ),
            Representation::Matrix { dist } => (
                "matrix".to_string(),
                None,
                Some(dist.chunks(space.len()).map(|r| r.to_vec()).collect()),
            ),
            Representation::Power { .. } => (
                "matrix".to_string(),
                None,
                Some(space.distance_matrix().chunks(space.len()).map(|r| r.to_vec()).collect()),
            ),
        };
        PointSetDoc {
            metric,
            points,
            matrix,
            labels: space.labels().map(|l| l.to_vec()),
            provenance: None,
        }
    }

    pub fn to_space(&self) -> Result<MetricSpace> {
        let space = match (&self.points, &self.matrix) {
            (Some(_), Some(_)) => {
                return Err(Error::Schema {
                    field: "points".into(),
                    reason: "exactly one of `points` and `matrix` may be present".into(),
                })
            }
            (None, None) => {
                return Err(Error::Schema {
                    field: "points".into(),
                    reason: "one of `points` or `matrix` is required".into(),
                })
            }
            (Some(p), None) => {
                let norm = Norm::parse(&self.metric).ok_or_else(|| Error::Schema {
                    field: "metric".into(),
                    reason: format!("`{}` is not one of sup, euclidean, l1 for a point payload", self.metric),
                })?;
                MetricSpace::from_coords(p, norm)?
            }
            (None, Some(m)) => {
                if self.metric != "matrix" {
                    return Err(Error::Schema {
                        field: "metric".into(),
                        reason: format!("a matrix payload requires metric \"matrix\", found `{}`", self.metric),
                    });
                }
                MetricSpace::from_matrix(m)?
            }
        };
        match &self.labels {
            Some(l) => space.with_labels(l.clone()),
            None => Ok(space),
        }
    }
}
