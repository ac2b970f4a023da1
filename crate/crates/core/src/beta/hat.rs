//! β̂: the best ordered sequence of ball points, charged its excess length
//! over the endpoint gap plus the distance from the farthest ball point to
//! the sequence, all relative to the gap.
//!
//! Every value returned here, exhaustive or heuristic, is the canonical
//! objective of one concrete sequence: edge lengths are summed in ascending
//! order so that a sequence and its reversal score identically, and the
//! sequence is oriented with the smaller index first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beta::{length_excess, BetaKind, BetaValue, Bound, CandidateSource, SearchConfig, Witness};
use crate::error::{Error, Result};
use crate::metric::{Ball, MetricSpace};

/// Above this many candidates, insertion moves only look at the ones
/// farthest from the current sequence.
const FULL_NEIGHBORHOOD: usize = 16;
const FOCUSED_MOVES: usize = 12;
const START_POOL: usize = 12;
/// Beyond this length, descent skips reordering moves.
const LONG_SEQUENCE: usize = 24;

/// Sum of nonnegative terms in ascending order.
pub(crate) fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// The β̂ objective of a sequence of point indices, with the covering term
/// taken over `cover` (usually the ball's members). Infinite when the
/// sequence has fewer than two points or coincident endpoints.
pub fn hat_objective(space: &MetricSpace, cover: &[usize], seq: &[usize]) -> f64 {
    if seq.len() < 2 {
        return f64::INFINITY;
    }
    let gap = space.dist(seq[0], seq[seq.len() - 1]);
    if !(gap > 0.0) {
        return f64::INFINITY;
    }
    let mut edges: Vec<f64> = seq.windows(2).map(|w| space.dist(w[0], w[1])).collect();
    let len = canonical_sum(&mut edges);
    let cov = cover
        .iter()
        .map(|&z| seq.iter().map(|&y| space.dist(z, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    (length_excess(len, gap) + cov) / gap
}

/// Distances among candidates and from cover points to candidates.
struct Problem {
    cand: Vec<usize>,
    m: usize,
    dcc: Vec<f64>,
    nz: usize,
    dzc: Vec<f64>,
}

impl Problem {
    fn new(space: &MetricSpace, cand: Vec<usize>, cover: &[usize]) -> Problem {
        let m = cand.len();
        let mut dcc = vec![0.0; m * m];
        for a in 0..m {
            for b in a + 1..m {
                let d = space.dist(cand[a], cand[b]);
                dcc[a * m + b] = d;
                dcc[b * m + a] = d;
            }
        }
        let nz = cover.len();
        let mut dzc = vec![0.0; nz * m];
        for (zi, &z) in cover.iter().enumerate() {
            for (a, &c) in cand.iter().enumerate() {
                dzc[zi * m + a] = space.dist(z, c);
            }
        }
        Problem { cand, m, dcc, nz, dzc }
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        self.dcc[a * self.m + b]
    }

    /// Same arithmetic as [`hat_objective`] on local indices.
    fn value(&self, seq: &[usize]) -> f64 {
        if seq.len() < 2 {
            return f64::INFINITY;
        }
        let gap = self.d(seq[0], seq[seq.len() - 1]);
        if !(gap > 0.0) {
            return f64::INFINITY;
        }
        let mut edges: Vec<f64> = seq.windows(2).map(|w| self.d(w[0], w[1])).collect();
        let len = canonical_sum(&mut edges);
        let mut cov = 0.0f64;
        for z in 0..self.nz {
            let row = &self.dzc[z * self.m..(z + 1) * self.m];
            let mut best = f64::INFINITY;
            for &y in seq {
                if row[y] < best {
                    best = row[y];
                    if best <= cov {
                        break;
                    }
                }
            }
            cov = cov.max(best);
        }
        (length_excess(len, gap) + cov) / gap
    }

    /// Original indices, oriented with the smaller index first.
    fn canonical(&self, seq: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = seq.iter().map(|&a| self.cand[a]).collect();
        if out.first() > out.last() {
            out.reverse();
        }
        out
    }

    fn better(&self, a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
        a.0 < b.0 || (a.0 == b.0 && self.canonical(&a.1) < self.canonical(&b.1))
    }
}

/// Exhaustive minimum over all sequences of distinct candidates with at
/// most `max_len` points: Held–Karp shortest Hamiltonian paths per
/// (subset, endpoints), then canonical rescoring of every near-optimal one.
fn exhaustive(p: &Problem, max_len: usize) -> Option<(f64, Vec<usize>)> {
    let m = p.m;
    let full = 1usize << m;
    let mut cover = vec![0.0f64; full];
    let mut mind = vec![f64::INFINITY; full];
    for z in 0..p.nz {
        let row = &p.dzc[z * m..(z + 1) * m];
        mind[0] = f64::INFINITY;
        for mask in 1..full {
            let low = mask.trailing_zeros() as usize;
            mind[mask] = mind[mask & (mask - 1)].min(row[low]);
            cover[mask] = cover[mask].max(mind[mask]);
        }
    }
    // dp[(s * full + mask) * m + v]: shortest path from s through mask ending at v
    let mut dp = vec![f64::INFINITY; m * full * m];
    let mut parent = vec![u8::MAX; m * full * m];
    for s in 0..m {
        dp[(s * full + (1 << s)) * m + s] = 0.0;
        for mask in 1..full {
            if mask & (1 << s) == 0 || mask.count_ones() as usize >= max_len {
                continue;
            }
            for v in 0..m {
                let cur = dp[(s * full + mask) * m + v];
                if !cur.is_finite() {
                    continue;
                }
                for w in 0..m {
                    if mask & (1 << w) != 0 {
                        continue;
                    }
                    let nm = mask | (1 << w);
                    let idx = (s * full + nm) * m + w;
                    let cand = cur + p.d(v, w);
                    if cand < dp[idx] {
                        dp[idx] = cand;
                        parent[idx] = v as u8;
                    }
                }
            }
        }
    }
    let estimate = |s: usize, mask: usize, t: usize| {
        let gap = p.d(s, t);
        let len = dp[(s * full + mask) * m + t];
        if !(gap > 0.0) || !len.is_finite() {
            return f64::INFINITY;
        }
        (length_excess(len, gap) + cover[mask]) / gap
    };
    let mut floor = f64::INFINITY;
    for s in 0..m {
        for mask in 1..full {
            for t in s + 1..m {
                if mask & (1 << s) != 0 && mask & (1 << t) != 0 {
                    floor = floor.min(estimate(s, mask, t));
                }
            }
        }
    }
    if !floor.is_finite() {
        return None;
    }
    let slack = 1e-9 * floor.max(1.0);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in 0..m {
        for mask in 1..full {
            for t in 0..m {
                if t == s || mask & (1 << s) == 0 || mask & (1 << t) == 0 {
                    continue;
                }
                if estimate(s, mask, t) > floor + slack {
                    continue;
                }
                let mut seq = vec![t];
                let (mut cur, mut v) = (mask, t);
                while v != s {
                    let pv = parent[(s * full + cur) * m + v] as usize;
                    cur &= !(1 << v);
                    v = pv;
                    seq.push(v);
                }
                seq.reverse();
                let cand = (p.value(&seq), seq);
                if best.as_ref().map_or(true, |b| p.better(&cand, b)) {
                    best = Some(cand);
                }
            }
        }
    }
    best
}

/// Farthest-point order of local indices starting from local index 0.
fn farthest_order(p: &Problem) -> Vec<usize> {
    let m = p.m;
    let mut mind = vec![f64::INFINITY; m];
    let mut order = vec![0];
    let mut used = vec![false; m];
    used[0] = true;
    while order.len() < m {
        let last = *order.last().unwrap();
        let mut pick = (usize::MAX, -1.0);
        for a in 0..m {
            mind[a] = mind[a].min(p.d(last, a));
            if !used[a] && mind[a] > pick.1 {
                pick = (a, mind[a]);
            }
        }
        used[pick.0] = true;
        order.push(pick.0);
    }
    order
}

/// Farthest-first insertion from the endpoint pair (s, t), tracking length
/// and cover incrementally; returns the best prefix seen, rescored
/// canonically.
fn insertion(p: &Problem, s: usize, t: usize, max_len: usize) -> (f64, Vec<usize>) {
    let m = p.m;
    let gap = p.d(s, t);
    let mut seq = vec![s, t];
    let mut inside = vec![false; m];
    inside[s] = true;
    inside[t] = true;
    let mut mind: Vec<f64> = (0..m).map(|a| p.d(a, s).min(p.d(a, t))).collect();
    let mut zmin: Vec<f64> = (0..p.nz)
        .map(|z| p.dzc[z * m + s].min(p.dzc[z * m + t]))
        .collect();
    let mut len = gap;
    let estimate = |len: f64, zmin: &[f64]| (length_excess(len, gap) + zmin.iter().cloned().fold(0.0, f64::max)) / gap;
    let mut best = (estimate(len, &zmin), seq.clone());
    while seq.len() < max_len {
        let mut pick = (usize::MAX, -1.0);
        for a in 0..m {
            if !inside[a] && mind[a] > pick.1 {
                pick = (a, mind[a]);
            }
        }
        if pick.0 == usize::MAX || pick.1 <= 0.0 {
            break;
        }
        let c = pick.0;
        let mut pos = (1, f64::INFINITY);
        for k in 1..seq.len() {
            let add = p.d(seq[k - 1], c) + p.d(c, seq[k]) - p.d(seq[k - 1], seq[k]);
            if add < pos.1 {
                pos = (k, add);
            }
        }
        seq.insert(pos.0, c);
        len += pos.1;
        inside[c] = true;
        for a in 0..m {
            mind[a] = mind[a].min(p.d(a, c));
        }
        for z in 0..p.nz {
            zmin[z] = zmin[z].min(p.dzc[z * m + c]);
        }
        let e = estimate(len, &zmin);
        if e < best.0 {
            best = (e, seq.clone());
        }
    }
    (p.value(&best.1), best.1)
}

/// Candidates not in `seq` that moves may bring in.
fn outside_pool(p: &Problem, seq: &[usize]) -> Vec<usize> {
    let mut out: Vec<(f64, usize)> = (0..p.m)
        .filter(|a| !seq.contains(a))
        .map(|a| (seq.iter().map(|&y| p.d(a, y)).fold(f64::INFINITY, f64::min), a))
        .collect();
    if out.len() > FULL_NEIGHBORHOOD {
        out.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        out.truncate(FOCUSED_MOVES);
    }
    out.into_iter().map(|x| x.1).collect()
}

fn neighbors(p: &Problem, seq: &[usize], max_len: usize) -> Vec<Vec<usize>> {
    let l = seq.len();
    let mut out = Vec::new();
    if l > 2 {
        for k in 0..l {
            let mut s = seq.to_vec();
            s.remove(k);
            out.push(s);
        }
    }
    let pool = outside_pool(p, seq);
    if l > LONG_SEQUENCE {
        // long sequences: cheapest-position insertion only, no reorderings
        for &c in &pool {
            if l < max_len {
                let k = (1..l)
                    .min_by(|&a, &b| {
                        let fa = p.d(seq[a - 1], c) + p.d(c, seq[a]) - p.d(seq[a - 1], seq[a]);
                        let fb = p.d(seq[b - 1], c) + p.d(c, seq[b]) - p.d(seq[b - 1], seq[b]);
                        fa.total_cmp(&fb)
                    })
                    .unwrap_or(1);
                for k in [0, k, l] {
                    let mut s = seq.to_vec();
                    s.insert(k, c);
                    out.push(s);
                }
            }
        }
        return out;
    }
    for &c in &pool {
        if l < max_len {
            for k in 0..=l {
                let mut s = seq.to_vec();
                s.insert(k, c);
                out.push(s);
            }
        }
        for k in 0..l {
            let mut s = seq.to_vec();
            s[k] = c;
            out.push(s);
        }
    }
    for i in 0..l {
        for j in i + 1..l {
            if i == 0 && j == l - 1 {
                continue;
            }
            let mut s = seq.to_vec();
            s[i..=j].reverse();
            out.push(s);
        }
    }
    for i in 0..l {
        for j in 0..l {
            if i == j || j == i + 1 {
                continue;
            }
            let mut s = seq.to_vec();
            let v = s.remove(i);
            s.insert(if j > i { j - 1 } else { j }, v);
            out.push(s);
        }
    }
    out
}

/// Best-improvement descent.
fn descend(p: &Problem, start: (f64, Vec<usize>), max_len: usize, iters: usize) -> (f64, Vec<usize>) {
    let mut cur = start;
    for _ in 0..iters.max(1) {
        let mut step: Option<(f64, Vec<usize>)> = None;
        for s in neighbors(p, &cur.1, max_len) {
            let cand = (p.value(&s), s);
            if p.better(&cand, step.as_ref().unwrap_or(&cur)) {
                step = Some(cand);
            }
        }
        match step {
            Some(s) => cur = s,
            None => break,
        }
    }
    cur
}

/// Random remove-and-insert perturbation.
fn kick(p: &Problem, seq: &[usize], max_len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut s = seq.to_vec();
    for _ in 0..2 {
        if s.len() > 2 && rng.gen_bool(0.5) {
            let k = rng.gen_range(0..s.len());
            s.remove(k);
        }
        let out: Vec<usize> = (0..p.m).filter(|a| !s.contains(a)).collect();
        if !out.is_empty() && s.len() < max_len {
            let c = out[rng.gen_range(0..out.len())];
            let k = rng.gen_range(0..=s.len());
            s.insert(k, c);
        }
    }
    s
}

fn heuristic(p: &Problem, cfg: &SearchConfig, extra: &[Vec<usize>]) -> Option<(f64, Vec<usize>)> {
    let max_len = cfg.max_sequence_length.min(p.m);
    let order = farthest_order(p);
    let pool = &order[..order.len().min(START_POOL)];
    let mut starts = Vec::new();
    for (a, &s) in pool.iter().enumerate() {
        for &t in &pool[a + 1..] {
            if p.d(s, t) > 0.0 {
                starts.push(insertion(p, s, t, max_len));
            }
        }
    }
    for e in extra {
        starts.push((p.value(e), e.clone()));
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if p.m > START_POOL {
        starts.truncate(6);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for st in starts {
        if !st.0.is_finite() {
            continue;
        }
        let loc = descend(p, st, max_len, cfg.local_search_iters);
        if best.as_ref().map_or(true, |b| p.better(&loc, b)) {
            best = Some(loc);
        }
    }
    let mut best = best?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kicks = (cfg.local_search_iters / 20).min(10);
    for _ in 0..kicks {
        let s = kick(p, &best.1, max_len, &mut rng);
        let v = p.value(&s);
        if !v.is_finite() {
            continue;
        }
        let loc = descend(p, (v, s), max_len, cfg.local_search_iters);
        if p.better(&loc, &best) {
            best = loc;
        }
    }
    Some(best)
}

/// Farthest-point net of the ball's members at `fraction · r`, starting
/// from the center when it belongs to the ball.
pub fn net_candidates(space: &MetricSpace, ball: &Ball, fraction: f64) -> Vec<usize> {
    let pts = &ball.members;
    if pts.is_empty() {
        return Vec::new();
    }
    let eps = fraction * ball.radius;
    let start = pts.iter().position(|&i| i == ball.center).unwrap_or(0);
    let mut mind = vec![f64::INFINITY; pts.len()];
    let mut chosen = vec![start];
    let mut cur = start;
    loop {
        let mut pick = (usize::MAX, -1.0);
        for (a, &i) in pts.iter().enumerate() {
            mind[a] = mind[a].min(space.dist(pts[cur], i));
            if mind[a] > pick.1 {
                pick = (a, mind[a]);
            }
        }
        if pick.1 < eps || pick.1 <= 0.0 {
            break;
        }
        chosen.push(pick.0);
        cur = pick.0;
    }
    let mut out: Vec<usize> = chosen.into_iter().map(|a| pts[a]).collect();
    out.sort_unstable();
    out
}

fn distinct_pair(space: &MetricSpace, pts: &[usize]) -> bool {
    pts.iter().any(|&i| space.dist(pts[0], i) > 0.0)
}

/// β̂ on a ball.
///
/// Balls with at most `exhaustive_threshold` points are solved exactly over
/// all of their points. Larger balls run the heuristic on the configured
/// candidates; with all ball points as candidates the net-point optimum
/// seeds the search, so enlarging the candidate set never raises the bound.
pub fn beta_hat(ball: &Ball, space: &MetricSpace, cfg: &SearchConfig) -> Result<BetaValue> {
    cfg.validate()?;
    if ball.len() < 2 {
        return Err(Error::Degenerate(format!("ball around {} has fewer than two points", ball.center)));
    }
    if !distinct_pair(space, &ball.members) {
        return Err(Error::Degenerate("all pairwise distances in the ball are 0".into()));
    }
    let (found, bound) = if ball.len() <= cfg.exhaustive_threshold {
        let p = Problem::new(space, ball.members.clone(), &ball.members);
        let max_len = cfg.max_sequence_length.min(p.m);
        (exhaustive(&p, max_len).map(|(v, s)| (v, p.canonical(&s))), Bound::Exact)
    } else {
        let (seq, v) = search(space, ball, cfg, cfg.candidate_source)?;
        (Some((v, seq)), Bound::Upper)
    };
    let (value, seq) = found.ok_or_else(|| Error::Degenerate("no sequence with a positive gap".into()))?;
    Ok(BetaValue {
        kind: BetaKind::Hat,
        value,
        bound,
        witness: Some(Witness::Sequence(seq)),
    })
}

/// Heuristic search; returns the canonical sequence and its value.
fn search(space: &MetricSpace, ball: &Ball, cfg: &SearchConfig, source: CandidateSource) -> Result<(Vec<usize>, f64)> {
    let (cand, extra) = match source {
        CandidateSource::NetPoints => {
            let mut c = net_candidates(space, ball, cfg.net_fraction);
            if c.len() < 2 || !distinct_pair(space, &c) {
                c = ball.members.clone();
            }
            (c, Vec::new())
        }
        CandidateSource::AllBallPoints => {
            let (seed, _) = search(space, ball, cfg, CandidateSource::NetPoints)?;
            (ball.members.clone(), vec![seed])
        }
    };
    let p = Problem::new(space, cand, &ball.members);
    let local: Vec<Vec<usize>> = extra
        .iter()
        .map(|s| s.iter().map(|i| p.cand.binary_search(i).expect("seed inside the ball")).collect())
        .collect();
    let (v, s) = heuristic(&p, cfg, &local).ok_or_else(|| Error::Degenerate("no sequence with a positive gap".into()))?;
    Ok((p.canonical(&s), v))
}

/// Heuristic β̂ regardless of ball size, over all ball points. Used to
/// cross-check the exhaustive solver.
pub fn beta_hat_heuristic(ball: &Ball, space: &MetricSpace, cfg: &SearchConfig) -> Result<BetaValue> {
    let cfg = SearchConfig {
        exhaustive_threshold: 0,
        candidate_source: CandidateSource::AllBallPoints,
        ..cfg.clone()
    };
    beta_hat(ball, space, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Norm;

    fn tripod() -> MetricSpace {
        // o, a, b, c
        MetricSpace::from_matrix(&[
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![1.0, 2.0, 2.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn tripod_exhaustive() {
        let s = tripod();
        let b = s.ball(0, 1.5).unwrap();
        let v = beta_hat(&b, &s, &SearchConfig::default()).unwrap();
        assert_eq!(v.bound, Bound::Exact);
        assert!((v.value - 0.5).abs() < 1e-15);
        assert_eq!(v.witness, Some(Witness::Sequence(vec![1, 0, 2])));
    }

    #[test]
    fn segment_is_zero() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0]).collect();
        let s = MetricSpace::from_coords(&rows, Norm::Euclidean).unwrap();
        let b = s.ball(15, 0.3).unwrap();
        let all = SearchConfig {
            candidate_source: CandidateSource::AllBallPoints,
            ..SearchConfig::default()
        };
        assert!(beta_hat(&b, &s, &all).unwrap().value < 1e-12);
    }

    #[test]
    fn witness_rescores() {
        let s = tripod();
        let b = s.ball(0, 3.0).unwrap();
        let v = beta_hat_heuristic(&b, &s, &SearchConfig::default()).unwrap();
        let Some(Witness::Sequence(seq)) = &v.witness else { panic!() };
        assert_eq!(hat_objective(&s, &b.members, seq), v.value);
    }

    #[test]
    fn heuristic_matches_exhaustive_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.gen_range(3..=8);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let s = MetricSpace::from_coords(&rows, Norm::Euclidean).unwrap();
            let b = s.ball(0, 10.0).unwrap();
            let ex = beta_hat(&b, &s, &SearchConfig::default()).unwrap();
            let he = beta_hat_heuristic(&b, &s, &SearchConfig::default()).unwrap();
            assert_eq!(ex.value, he.value, "{rows:?}");
        }
    }

    #[test]
    fn degenerate_rejected() {
        let s = MetricSpace::from_coords(&[vec![0.0], vec![0.0]], Norm::Sup).unwrap();
        let b = s.ball(0, 1.0).unwrap();
        assert!(beta_hat(&b, &s, &SearchConfig::default()).is_err());
    }

    #[test]
    fn enlarging_candidates_never_raises() {
        let s = crate::fractal::generate_antenna(0.25, 4).unwrap().space;
        let b = s.ball(0, 0.6).unwrap();
        let net = beta_hat(&b, &s, &SearchConfig::default()).unwrap();
        let all = beta_hat(
            &b,
            &s,
            &SearchConfig {
                candidate_source: CandidateSource::AllBallPoints,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        assert!(all.value <= net.value);
    }
}
