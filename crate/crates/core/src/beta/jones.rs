//! Jones' β: (1/r) times the smallest possible largest distance from the
//! ball's points to a line.
//!
//! In the plane the minimax line is the midline of the minimal-width strip,
//! found exactly from the convex hull. Three points in any dimension span a
//! plane and reduce to the same computation. Otherwise a principal direction
//! is refined by local search, scoring each direction by the minimum
//! enclosing ball of the points projected onto its orthogonal complement.

use crate::beta::{BetaKind, BetaValue, Bound, Witness};
use crate::error::{param, Result};
use crate::metric::{Ball, MetricSpace, Norm};

const REFINE_TOL: f64 = 1e-9;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance from `z` to the line through `p` with unit direction `u`.
pub fn line_distance(z: &[f64], p: &[f64], u: &[f64]) -> f64 {
    let w = sub(z, p);
    let t = dot(&w, u);
    w.iter().zip(u).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>().sqrt()
}

/// Largest distance from the points to a line.
pub fn line_deviation(pts: &[Vec<f64>], p: &[f64], u: &[f64]) -> f64 {
    pts.iter().map(|z| line_distance(z, p, u)).fold(0.0, f64::max)
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull of planar points, counter-clockwise, without collinear
/// vertices.
pub fn convex_hull(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut p: Vec<Vec<f64>> = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let mut lower: Vec<Vec<f64>> = Vec::new();
    for q in &p {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q.clone());
    }
    let mut upper: Vec<Vec<f64>> = Vec::new();
    for q in p.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// The midline of the minimal-width strip around planar points:
/// (point, unit direction, half width).
fn planar_minimax_line(pts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, f64) {
    let hull = convex_hull(pts);
    match hull.len() {
        0 => (vec![0.0, 0.0], vec![1.0, 0.0], 0.0),
        1 => (hull[0].clone(), vec![1.0, 0.0], 0.0),
        2 => {
            let d = sub(&hull[1], &hull[0]);
            let l = norm2(&d);
            (hull[0].clone(), vec![d[0] / l, d[1] / l], 0.0)
        }
        h => {
            let mut best = (f64::INFINITY, 0usize);
            for e in 0..h {
                let (a, b) = (&hull[e], &hull[(e + 1) % h]);
                let len = norm2(&sub(b, a));
                let width = hull.iter().map(|q| cross(a, b, q).abs() / len).fold(0.0, f64::max);
                if width < best.0 {
                    best = (width, e);
                }
            }
            let (w, e) = best;
            let (a, b) = (&hull[e], &hull[(e + 1) % h]);
            let d = sub(b, a);
            let len = norm2(&d);
            let u = vec![d[0] / len, d[1] / len];
            // inward normal for a counter-clockwise hull
            let nrm = [-u[1], u[0]];
            let p = vec![a[0] + nrm[0] * w / 2.0, a[1] + nrm[1] * w / 2.0];
            (p, u, w / 2.0)
        }
    }
}

/// Minimax line for three points in any dimension: parallel to the longest
/// side, halfway to the opposite vertex.
fn triangle_minimax_line(pts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let sides = [(0, 1, 2), (1, 2, 0), (0, 2, 1)];
    let (i, j, k) = sides
        .iter()
        .copied()
        .max_by(|a, b| norm2(&sub(&pts[a.1], &pts[a.0])).total_cmp(&norm2(&sub(&pts[b.1], &pts[b.0]))))
        .unwrap();
    let d = sub(&pts[j], &pts[i]);
    let l = norm2(&d);
    if l == 0.0 {
        let mut u = vec![0.0; pts[0].len()];
        u[0] = 1.0;
        return (pts[i].clone(), u);
    }
    let u: Vec<f64> = d.iter().map(|x| x / l).collect();
    let w = sub(&pts[k], &pts[i]);
    let t = dot(&w, &u);
    let foot: Vec<f64> = pts[i].iter().zip(&u).map(|(p, e)| p + t * e).collect();
    let p: Vec<f64> = foot.iter().zip(&pts[k]).map(|(f, q)| 0.5 * (f + q)).collect();
    (p, u)
}

/// Approximate minimum enclosing ball center (Bădoiu–Clarkson iterations).
fn meb_center(pts: &[Vec<f64>]) -> Vec<f64> {
    let mut c = pts[0].clone();
    for k in 1..=400 {
        let far = pts
            .iter()
            .max_by(|a, b| norm2(&sub(a, &c)).total_cmp(&norm2(&sub(b, &c))))
            .unwrap();
        let step = 1.0 / (k as f64 + 1.0);
        for (ci, fi) in c.iter_mut().zip(far) {
            *ci += step * (fi - *ci);
        }
    }
    c
}

/// Best line with direction `u`: projects onto u^⊥ and centers it there.
fn line_for_direction(pts: &[Vec<f64>], u: &[f64]) -> (Vec<f64>, f64) {
    let proj: Vec<Vec<f64>> = pts
        .iter()
        .map(|z| {
            let t = dot(z, u);
            z.iter().zip(u).map(|(a, b)| a - t * b).collect()
        })
        .collect();
    let c = meb_center(&proj);
    let dev = line_deviation(pts, &c, u);
    (c, dev)
}

fn normalize(v: &mut [f64]) {
    let l = norm2(v);
    if l > 0.0 {
        v.iter_mut().for_each(|x| *x /= l);
    }
}

fn principal_direction(pts: &[Vec<f64>]) -> Vec<f64> {
    let d = pts[0].len();
    let n = pts.len() as f64;
    let mean: Vec<f64> = (0..d).map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let mut cov = vec![0.0; d * d];
    for p in pts {
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    let mut v: Vec<f64> = (0..d).map(|k| 1.0 + k as f64 * 0.1).collect();
    normalize(&mut v);
    for _ in 0..200 {
        let mut w: Vec<f64> = (0..d).map(|a| (0..d).map(|b| cov[a * d + b] * v[b]).sum()).collect();
        if norm2(&w) == 0.0 {
            break;
        }
        normalize(&mut w);
        v = w;
    }
    v
}

/// Principal direction refined by coordinate-wise direction perturbation
/// until the improvement drops below 1e-9.
fn refined_line(pts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = pts[0].len();
    let mut u = principal_direction(pts);
    let (mut p, mut dev) = line_for_direction(pts, &u);
    let mut step = 0.25;
    while step > 1e-6 {
        let mut improved = false;
        for k in 0..d {
            for sgn in [1.0, -1.0] {
                let mut v = u.clone();
                v[k] += sgn * step;
                normalize(&mut v);
                let (q, dv) = line_for_direction(pts, &v);
                if dv < dev - REFINE_TOL {
                    u = v;
                    p = q;
                    dev = dv;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, u)
}

/// Jones' β of the ball's points, which must carry euclidean coordinates.
pub fn jones_beta(ball: &Ball, space: &MetricSpace) -> Result<BetaValue> {
    if space.norm() != Some(Norm::Euclidean) {
        return Err(param("space", "Jones β needs euclidean coordinates"));
    }
    let pts: Vec<Vec<f64>> = ball.members.iter().map(|&i| space.point(i).unwrap().to_vec()).collect();
    let r = ball.radius;
    let dim = space.dim().unwrap();
    if pts.len() <= 2 || dim == 1 {
        let witness = match pts.len() {
            0 | 1 => None,
            _ => {
                let mut d = sub(&pts[pts.len() - 1], &pts[0]);
                normalize(&mut d);
                Some(Witness::Line {
                    point: pts[0].clone(),
                    direction: d,
                })
            }
        };
        return Ok(BetaValue {
            kind: BetaKind::Jones,
            value: 0.0,
            bound: Bound::Exact,
            witness,
        });
    }
    let (p, u, bound) = if dim == 2 {
        let (p, u, _) = planar_minimax_line(&pts);
        (p, u, Bound::Exact)
    } else if pts.len() == 3 {
        let (p, u) = triangle_minimax_line(&pts);
        (p, u, Bound::Exact)
    } else {
        let (p, u) = refined_line(&pts);
        (p, u, Bound::Upper)
    };
    let value = line_deviation(&pts, &p, &u) / r;
    Ok(BetaValue {
        kind: BetaKind::Jones,
        value,
        bound,
        witness: Some(Witness::Line { point: p, direction: u }),
    })
}
