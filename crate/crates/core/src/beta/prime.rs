//! Upper bounds for β′ and β″ by searching polygonal curves in an ambient
//! space around the ball.
//!
//! Spaces with coordinates use them directly. Distance-matrix spaces are
//! embedded locally: each ball point becomes its row of distances to the
//! ball's points, under the sup norm, which is isometric on the ball.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beta::hat::{beta_hat, canonical_sum, net_candidates};
use crate::beta::{length_excess, BetaKind, BetaValue, Bound, SearchConfig, Witness};
use crate::error::{param, Error, Result};
use crate::metric::{Ball, MetricSpace, Norm, PolygonalPath};

const MAX_DIRECTIONS: usize = 8;
const MIN_STEP: f64 = 1e-4;
/// Perturbation is skipped when one path evaluation would cost more than
/// this many coordinate operations.
const PERTURB_BUDGET: usize = 4_000_000;

/// The ball's points in ambient coordinates.
#[derive(Clone, Debug)]
pub struct LocalEmbedding {
    pub norm: Norm,
    /// Coordinates of `ball.members[k]`.
    pub points: Vec<Vec<f64>>,
    /// Position of the center within the members.
    pub center: usize,
}

impl LocalEmbedding {
    pub fn of(space: &MetricSpace, ball: &Ball) -> LocalEmbedding {
        let center = ball.members.iter().position(|&i| i == ball.center).unwrap_or(0);
        match (space.norm(), space.dim()) {
            (Some(norm), Some(_)) => LocalEmbedding {
                norm,
                points: ball.members.iter().map(|&i| space.point(i).unwrap().to_vec()).collect(),
                center,
            },
            _ => LocalEmbedding {
                norm: Norm::Sup,
                points: ball
                    .members
                    .iter()
                    .map(|&i| ball.members.iter().map(|&j| space.dist(i, j)).collect())
                    .collect(),
                center,
            },
        }
    }

    fn x(&self) -> &[f64] {
        &self.points[self.center]
    }
}

/// The β′ objective (or β″ when `sqrt` is set) of a polygonal path, with
/// the covering term taken over `cover`.
pub fn path_objective(vertices: &[Vec<f64>], norm: Norm, cover: &[Vec<f64>], sqrt: bool) -> f64 {
    if vertices.len() < 2 {
        return f64::INFINITY;
    }
    let gap = norm.dist(&vertices[0], &vertices[vertices.len() - 1]);
    if !(gap > 0.0) {
        return f64::INFINITY;
    }
    let mut edges: Vec<f64> = vertices.windows(2).map(|w| norm.dist(&w[0], &w[1])).collect();
    let dev = length_excess(canonical_sum(&mut edges), gap);
    let path = PolygonalPath::new(vertices.to_vec(), norm);
    let mut cov = 0.0f64;
    for z in cover {
        let d = path.distance_to_below(z, cov);
        if d > cov {
            cov = d;
        }
    }
    if sqrt {
        (dev / gap).sqrt() + cov / gap
    } else {
        (dev + cov) / gap
    }
}

/// Unit vector (in `norm`) along `v`, if `v` is nonzero.
fn unit(v: &[f64], norm: Norm) -> Option<Vec<f64>> {
    let zero = vec![0.0; v.len()];
    let l = norm.dist(v, &zero);
    (l > 0.0).then(|| v.iter().map(|a| a / l).collect())
}

/// Diameters x ± r·u of the ball in several directions. Each covers every
/// ball point within less than r, so scores below ½.
fn center_segments(emb: &LocalEmbedding, space: &MetricSpace, ball: &Ball, cfg: &SearchConfig) -> Vec<Vec<Vec<f64>>> {
    let x = emb.x();
    let dim = x.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let far: Vec<usize> = net_candidates(space, ball, cfg.net_fraction);
    let mut by_dist: Vec<(f64, usize)> = far
        .iter()
        .map(|&i| {
            let k = ball.members.binary_search(&i).unwrap();
            (emb.norm.dist(x, &emb.points[k]), k)
        })
        .collect();
    by_dist.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in by_dist.iter().take(MAX_DIRECTIONS) {
        let v: Vec<f64> = emb.points[k].iter().zip(x).map(|(a, b)| a - b).collect();
        if let Some(u) = unit(&v, emb.norm) {
            dirs.push(u);
        }
    }
    for k in 0..dim.min(MAX_DIRECTIONS) {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        dirs.push(e);
    }
    let r = ball.radius;
    dirs.into_iter()
        .map(|u| {
            let a: Vec<f64> = x.iter().zip(&u).map(|(c, e)| c - r * e).collect();
            let b: Vec<f64> = x.iter().zip(&u).map(|(c, e)| c + r * e).collect();
            vec![a, b]
        })
        .collect()
}

/// Pulls `v` back into the closed ball around `x`.
fn clamp_to_ball(v: &mut [f64], x: &[f64], r: f64, norm: Norm) {
    let d = norm.dist(v, x);
    if d > r {
        let s = r / d;
        for (a, c) in v.iter_mut().zip(x) {
            *a = c + (*a - c) * s;
        }
    }
}

/// Random vertex moves, accepted on strict improvement; the step shrinks
/// after repeated failures.
fn perturb(
    start: (f64, Vec<Vec<f64>>),
    emb: &LocalEmbedding,
    r: f64,
    sqrt: bool,
    cfg: &SearchConfig,
) -> (f64, Vec<Vec<f64>>) {
    let mut best = start;
    let cost = emb.points.len() * best.1.len() * emb.x().len();
    if cost > PERTURB_BUDGET {
        return best;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9);
    let mut step = 0.25;
    let mut fails = 0;
    for _ in 0..cfg.local_search_iters {
        if best.0 == 0.0 || step < MIN_STEP {
            break;
        }
        let k = rng.gen_range(0..best.1.len());
        let mut cand = best.1.clone();
        for a in cand[k].iter_mut() {
            *a += step * r * rng.gen_range(-1.0..1.0);
        }
        clamp_to_ball(&mut cand[k], emb.x(), r, emb.norm);
        let v = path_objective(&cand, emb.norm, &emb.points, sqrt);
        if v < best.0 {
            best = (v, cand);
            fails = 0;
        } else {
            fails += 1;
            if fails >= 10 {
                step *= 0.5;
                fails = 0;
            }
        }
    }
    best
}

fn search(
    ball: &Ball,
    space: &MetricSpace,
    cfg: &SearchConfig,
    hat: &BetaValue,
    extra: Vec<Vec<Vec<f64>>>,
    sqrt: bool,
) -> Result<BetaValue> {
    if ball.len() < 2 {
        return Err(Error::Degenerate(format!("ball around {} has fewer than two points", ball.center)));
    }
    let emb = LocalEmbedding::of(space, ball);
    let mut candidates = center_segments(&emb, space, ball, cfg);
    if let Some(Witness::Sequence(seq)) = &hat.witness {
        candidates.push(
            seq.iter()
                .map(|i| emb.points[ball.members.binary_search(i).expect("witness inside the ball")].clone())
                .collect(),
        );
    }
    candidates.extend(extra);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for c in candidates {
        let v = path_objective(&c, emb.norm, &emb.points, sqrt);
        if best.as_ref().map_or(true, |b| v < b.0) {
            best = Some((v, c));
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("no candidate curve".into()))?;
    let (value, path) = perturb(best, &emb, ball.radius, sqrt, cfg);
    Ok(BetaValue {
        kind: if sqrt { BetaKind::DoublePrime } else { BetaKind::Prime },
        value,
        bound: Bound::Upper,
        witness: Some(Witness::Path(path)),
    })
}

/// Upper bound for β′ on a ball, reusing a β̂ result for its witness.
pub fn beta_prime_with_hat(ball: &Ball, space: &MetricSpace, cfg: &SearchConfig, hat: &BetaValue) -> Result<BetaValue> {
    search(ball, space, cfg, hat, Vec::new(), false)
}

/// Upper bound for β′ on a ball.
pub fn beta_prime_upper(ball: &Ball, space: &MetricSpace, cfg: &SearchConfig) -> Result<BetaValue> {
    let hat = beta_hat(ball, space, cfg)?;
    beta_prime_with_hat(ball, space, cfg, &hat)
}

/// The chord of the ball cut out by a line when the line passes within r/2
/// of the center, otherwise the diameter parallel to it.
pub fn line_chord(x: &[f64], r: f64, point: &[f64], dir: &[f64]) -> Vec<Vec<f64>> {
    let w: Vec<f64> = point.iter().zip(x).map(|(p, c)| p - c).collect();
    let b: f64 = w.iter().zip(dir).map(|(a, e)| a * e).sum();
    let h2 = w.iter().map(|a| a * a).sum::<f64>() - b * b;
    if h2.max(0.0).sqrt() <= r / 2.0 {
        let half = (r * r - h2).sqrt();
        let foot: Vec<f64> = point.iter().zip(dir).map(|(p, e)| p - b * e).collect();
        vec![
            foot.iter().zip(dir).map(|(f, e)| f - half * e).collect(),
            foot.iter().zip(dir).map(|(f, e)| f + half * e).collect(),
        ]
    } else {
        vec![
            x.iter().zip(dir).map(|(c, e)| c - r * e).collect(),
            x.iter().zip(dir).map(|(c, e)| c + r * e).collect(),
        ]
    }
}

/// β″ score of the chord along a Jones line witness.
pub fn double_prime_line_candidate(ball: &Ball, space: &MetricSpace, jones: &BetaValue) -> Result<f64> {
    let Some(Witness::Line { point, direction }) = &jones.witness else {
        return Err(param("jones", "needs a line witness"));
    };
    let emb = LocalEmbedding::of(space, ball);
    let chord = line_chord(emb.x(), ball.radius, point, direction);
    Ok(path_objective(&chord, emb.norm, &emb.points, true))
}

/// Upper bound for β″ on a ball of a euclidean space. The chord along the
/// Jones line is among the candidates.
pub fn beta_double_prime(ball: &Ball, space: &MetricSpace, cfg: &SearchConfig) -> Result<BetaValue> {
    if space.norm() != Some(Norm::Euclidean) {
        return Err(param("space", "β″ needs euclidean coordinates"));
    }
    let hat = beta_hat(ball, space, cfg)?;
    let jones = crate::beta::jones::jones_beta(ball, space)?;
    let mut extra = Vec::new();
    if let Some(Witness::Line { point, direction }) = &jones.witness {
        let x = space.point(ball.center).unwrap();
        extra.push(line_chord(x, ball.radius, point, direction));
    }
    search(ball, space, cfg, &hat, extra, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::hat::hat_objective;

    fn v_set(eps: f64, n: usize) -> MetricSpace {
        let mut rows = Vec::new();
        for k in 0..n {
            let t = k as f64 / n as f64;
            rows.push(vec![-t, 0.0]);
            if k > 0 {
                rows.push(vec![t * eps.cos(), t * eps.sin()]);
            }
        }
        MetricSpace::from_coords(&rows, Norm::Euclidean).unwrap()
    }

    #[test]
    fn segment_is_zero() {
        let rows: Vec<Vec<f64>> = (0..41).map(|i| vec![i as f64 / 40.0, 0.0]).collect();
        let s = MetricSpace::from_coords(&rows, Norm::Sup).unwrap();
        let b = s.ball(20, 0.3).unwrap();
        let cfg = SearchConfig {
            candidate_source: crate::beta::CandidateSource::AllBallPoints,
            ..SearchConfig::default()
        };
        let v = beta_prime_upper(&b, &s, &cfg).unwrap();
        assert!(v.value < 1e-12);
    }

    #[test]
    fn capped_by_half() {
        let s = MetricSpace::from_matrix(&[
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![1.0, 2.0, 2.0, 0.0],
        ])
        .unwrap();
        let b = s.ball(0, 1.5).unwrap();
        let v = beta_prime_upper(&b, &s, &SearchConfig::default()).unwrap();
        assert!(v.value <= 0.5);
        let Some(Witness::Path(p)) = &v.witness else { panic!() };
        let emb = LocalEmbedding::of(&s, &b);
        assert!((path_objective(p, emb.norm, &emb.points, false) - v.value).abs() < 1e-9);
    }

    #[test]
    fn v_set_two_segments() {
        let eps = 0.1;
        let s = v_set(eps, 400);
        let b = s.ball(0, 1.0).unwrap();
        let cfg = SearchConfig::default();
        let p = beta_prime_upper(&b, &s, &cfg).unwrap();
        assert!((p.value - eps * eps / 8.0).abs() < 2e-4, "{}", p.value);
        let two = vec![vec![-1.0, 0.0], vec![0.0, 0.0], vec![eps.cos(), eps.sin()]];
        let emb = LocalEmbedding::of(&s, &b);
        let dp = path_objective(&two, emb.norm, &emb.points, true);
        assert!((dp - eps / (2.0 * 2f64.sqrt())).abs() < 1e-3, "{dp}");
        let q = beta_double_prime(&b, &s, &cfg).unwrap();
        assert!(q.value <= dp + 1e-12);
    }

    #[test]
    fn prime_below_hat_on_witness() {
        let s = crate::fractal::generate_antenna(0.25, 4).unwrap().space;
        let b = s.ball(3, 0.4).unwrap();
        let cfg = SearchConfig::default();
        let hat = beta_hat(&b, &s, &cfg).unwrap();
        let p = beta_prime_with_hat(&b, &s, &cfg, &hat).unwrap();
        let Some(Witness::Sequence(seq)) = &hat.witness else { panic!() };
        assert_eq!(hat_objective(&s, &b.members, seq), hat.value);
        assert!(p.value <= hat.value + 1e-12);
    }

    #[test]
    fn double_prime_chord_below_jones() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen::<f64>(), 0.2 * rng.gen::<f64>()]).collect();
        let s = MetricSpace::from_coords(&rows, Norm::Euclidean).unwrap();
        for c in 0..10 {
            let b = s.ball(c, 0.4).unwrap();
            if b.len() < 2 {
                continue;
            }
            let j = crate::beta::jones::jones_beta(&b, &s).unwrap();
            let v = double_prime_line_candidate(&b, &s, &j).unwrap();
            assert!(v <= j.value + 1e-6, "{v} > {}", j.value);
        }
    }
}
