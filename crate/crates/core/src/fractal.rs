//! Deterministic generators for the example spaces and the snowflake
//! transform d ↦ d^γ.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{param, Error, Result};
use crate::metric::{MetricSpace, Norm};

const DEDUP_TOL: f64 = 1e-12;
/// Largest antenna depth accepted (the orbit has up to 2·4^depth points).
pub const MAX_ANTENNA_DEPTH: u32 = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct GeneratorOutput {
    pub space: MetricSpace,
    pub provenance: Provenance,
}

fn provenance(name: &str, params: serde_json::Value, depth: Option<u32>) -> Provenance {
    Provenance {
        generator: name.to_string(),
        params,
        depth,
        seed: 0,
    }
}

type C = (f64, f64);

/// Sorts points lexicographically and drops any point within `DEDUP_TOL`
/// (sup distance) of one already kept.
fn dedup_points(mut pts: Vec<C>) -> Vec<C> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut kept: Vec<C> = Vec::with_capacity(pts.len());
    for p in pts {
        let mut dup = false;
        for q in kept.iter().rev() {
            if p.0 - q.0 > DEDUP_TOL {
                break;
            }
            if (p.1 - q.1).abs() <= DEDUP_TOL {
                dup = true;
                break;
            }
        }
        if !dup {
            kept.push(p);
        }
    }
    kept
}

/// The antenna similarity `k` applied to z = (x, y).
fn antenna_map(k: usize, alpha: f64, (x, y): C) -> C {
    match k {
        0 => (x / 2.0, y / 2.0),
        1 => ((x + 1.0) / 2.0, y / 2.0),
        // iαz + 1/2
        2 => (-alpha * y + 0.5, alpha * x),
        // −iαz + 1/2 + iα
        _ => (alpha * y + 0.5, -alpha * x + alpha),
    }
}

/// Orbit of {0, 1} under all depth-fold compositions of the antenna maps.
pub fn generate_antenna(alpha: f64, depth: u32) -> Result<GeneratorOutput> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(param("alpha", format!("must lie in (0, 1/2), got {alpha}")));
    }
    if depth > MAX_ANTENNA_DEPTH {
        return Err(param("depth", format!("at most {MAX_ANTENNA_DEPTH}, got {depth}")));
    }
    let mut pts: Vec<C> = vec![(0.0, 0.0), (1.0, 0.0)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for k in 0..4 {
            next.extend(pts.iter().map(|&p| antenna_map(k, alpha, p)));
        }
        pts = dedup_points(next);
    }
    let pts = dedup_points(pts);
    let rows: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_coords(&rows, Norm::Euclidean)?,
        provenance: provenance("antenna", json!({ "alpha": alpha }), Some(depth)),
    })
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(param("resolution", format!("need at least 2 points, got {resolution}")));
    }
    Ok(())
}

/// `resolution` uniform points on [0, 1], euclidean.
pub fn segment(resolution: usize) -> Result<GeneratorOutput> {
    check_resolution(resolution)?;
    let last = (resolution - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..resolution).map(|i| vec![i as f64 / last]).collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_coords(&rows, Norm::Euclidean)?,
        provenance: provenance("segment", json!({ "resolution": resolution }), None),
    })
}

/// Three unit legs from the origin along the basis vectors of R³, with
/// `resolution` points per leg (the origin shared).
pub fn tripod(resolution: usize) -> Result<GeneratorOutput> {
    check_resolution(resolution)?;
    let last = (resolution - 1) as f64;
    let mut rows = vec![vec![0.0; 3]];
    for leg in 0..3 {
        for i in 1..resolution {
            let mut p = vec![0.0; 3];
            p[leg] = i as f64 / last;
            rows.push(p);
        }
    }
    Ok(GeneratorOutput {
        space: MetricSpace::from_coords(&rows, Norm::Euclidean)?,
        provenance: provenance("tripod", json!({ "resolution": resolution }), None),
    })
}

/// The same tripod with its intrinsic path metric, as a distance matrix.
pub fn tripod_path_metric(resolution: usize) -> Result<GeneratorOutput> {
    check_resolution(resolution)?;
    let last = (resolution - 1) as f64;
    // (leg, distance from origin); leg is irrelevant at the origin
    let mut pts = vec![(usize::MAX, 0.0)];
    for leg in 0..3 {
        for i in 1..resolution {
            pts.push((leg, i as f64 / last));
        }
    }
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(la, ta)| {
            pts.iter()
                .map(|&(lb, tb)| if la == lb || ta == 0.0 || tb == 0.0 { (ta - tb).abs() } else { ta + tb })
                .collect()
        })
        .collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_matrix(&rows)?,
        provenance: provenance("tripod_path", json!({ "resolution": resolution }), None),
    })
}

/// Indicators of [0, t] in L¹ at `resolution` uniform parameters, as the exact
/// distance matrix |t − s|.
pub fn l1_geodesic(resolution: usize) -> Result<GeneratorOutput> {
    check_resolution(resolution)?;
    let last = (resolution - 1) as f64;
    let t: Vec<f64> = (0..resolution).map(|i| i as f64 / last).collect();
    let rows: Vec<Vec<f64>> = t.iter().map(|a| t.iter().map(|b| (a - b).abs()).collect()).collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_matrix(&rows)?,
        provenance: provenance("l1_geodesic", json!({ "resolution": resolution }), None),
    })
}

/// The same indicators as vectors on a grid of `resolution − 1` cells with
/// the l1 norm; cell values are the cell width.
pub fn l1_geodesic_embedded(resolution: usize) -> Result<GeneratorOutput> {
    check_resolution(resolution)?;
    let cells = resolution - 1;
    let w = 1.0 / cells as f64;
    let rows: Vec<Vec<f64>> = (0..resolution)
        .map(|i| (0..cells).map(|k| if k < i { w } else { 0.0 }).collect())
        .collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_coords(&rows, Norm::L1)?,
        provenance: provenance("l1_geodesic_embedded", json!({ "resolution": resolution }), None),
    })
}

/// Koch-type curve: each segment becomes four of ratio 1/(2 + 2 cos θ), the
/// middle two raised at angle θ. θ = 60° gives the classical curve.
pub fn koch(depth: u32, angle_deg: f64) -> Result<GeneratorOutput> {
    if !(angle_deg > 0.0 && angle_deg < 90.0) {
        return Err(param("angle", format!("must lie in (0, 90) degrees, got {angle_deg}")));
    }
    if depth > 9 {
        return Err(param("depth", format!("at most 9, got {depth}")));
    }
    let th = angle_deg.to_radians();
    let r = 1.0 / (2.0 + 2.0 * th.cos());
    let mut pts: Vec<C> = vec![(0.0, 0.0), (1.0, 0.0)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let p1 = (a.0 + r * dx, a.1 + r * dy);
            let p3 = (b.0 - r * dx, b.1 - r * dy);
            // rotate the first piece by θ and attach at p1
            let (ux, uy) = (r * dx, r * dy);
            let p2 = (p1.0 + ux * th.cos() - uy * th.sin(), p1.1 + ux * th.sin() + uy * th.cos());
            next.extend([a, p1, p2, p3]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    let rows: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_coords(&rows, Norm::Euclidean)?,
        provenance: provenance("koch", json!({ "angle": angle_deg }), Some(depth)),
    })
}

/// Low-amplitude zigzag: at generation k each segment is bent at its middle
/// by angle θ·2⁻ᵏ, alternating sides, so the bends decay geometrically.
pub fn zigzag(depth: u32, angle_deg: f64) -> Result<GeneratorOutput> {
    if !(angle_deg > 0.0 && angle_deg < 60.0) {
        return Err(param("angle", format!("must lie in (0, 60) degrees, got {angle_deg}")));
    }
    if depth > 16 {
        return Err(param("depth", format!("at most 16, got {depth}")));
    }
    let mut pts: Vec<C> = vec![(0.0, 0.0), (1.0, 0.0)];
    for k in 0..depth {
        let th = angle_deg.to_radians() * 0.5f64.powi(k as i32);
        let h = 0.5 * th.tan();
        let mut next = Vec::with_capacity(pts.len() * 2);
        for (s, w) in pts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let side = if s % 2 == 0 { 1.0 } else { -1.0 };
            let mid = (a.0 + 0.5 * dx - side * h * dy, a.1 + 0.5 * dy + side * h * dx);
            next.extend([a, mid]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    let rows: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
    Ok(GeneratorOutput {
        space: MetricSpace::from_coords(&rows, Norm::Euclidean)?,
        provenance: provenance("zigzag", json!({ "angle": angle_deg }), Some(depth)),
    })
}

/// Named generator dispatch. Depth-based generators read `depth` and
/// `angle`; the rest read `resolution`.
pub fn generate_named(name: &str, resolution: usize, depth: u32, alpha: f64, angle: Option<f64>) -> Result<GeneratorOutput> {
    match name {
        "antenna" => generate_antenna(alpha, depth),
        "segment" => segment(resolution),
        "tripod" => tripod(resolution),
        "tripod_path" | "tripod-path" => tripod_path_metric(resolution),
        "l1_geodesic" | "l1-geodesic" => l1_geodesic(resolution),
        "l1_geodesic_embedded" | "l1-geodesic-embedded" => l1_geodesic_embedded(resolution),
        "koch" => koch(depth, angle.unwrap_or(60.0)),
        "zigzag" => zigzag(depth, angle.unwrap_or(20.0)),
        other => Err(param("fractal", format!("unknown generator `{other}`"))),
    }
}

/// The metric d^γ. Distances are evaluated on demand from the input space;
/// call [`MetricSpace::to_matrix`] for an explicit matrix. The triangle
/// inequality is re-verified (exhaustively up to 300 points, sampled above).
pub fn snowflake(space: &MetricSpace, gamma: f64) -> Result<MetricSpace> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(param("gamma", format!("must lie in (0, 1], got {gamma}")));
    }
    let out = space.power(gamma);
    out.validate()?;
    Ok(out)
}

/// Unique s ≥ 0 with Σ rᵢˢ = 1, by bisection to 1e-10.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(param("ratios", "need at least one ratio"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(param("ratios", format!("each ratio must lie in (0, 1), got {r}")));
    }
    if ratios.len() <= 1 {
        return Ok(0.0);
    }
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Degenerate("Moran equation has no root below 1e6".into()));
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has(space: &MetricSpace, x: f64, y: f64) -> bool {
        (0..space.len()).any(|i| {
            let p = space.point(i).unwrap();
            (p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12
        })
    }

    #[test]
    fn antenna_depth_zero_and_one() {
        let a = generate_antenna(0.25, 0).unwrap().space;
        assert_eq!(a.len(), 2);
        let a = generate_antenna(0.25, 1).unwrap().space;
        for (x, y) in [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (0.5, 0.25)] {
            assert!(has(&a, x, y), "missing ({x}, {y})");
        }
        assert!(generate_antenna(0.5, 1).is_err());
    }

    #[test]
    fn antenna_counts_increase() {
        let mut prev = 0;
        for d in 0..=6 {
            let n = generate_antenna(0.25, d).unwrap().space.len();
            assert!(n > prev && n <= 2 * 4usize.pow(d));
            prev = n;
        }
    }

    #[test]
    fn tripod_tip_distances() {
        let t = tripod(11).unwrap().space;
        assert!((t.dist(10, 20) - 2f64.sqrt()).abs() < 1e-12);
        let p = tripod_path_metric(11).unwrap().space;
        assert!((p.dist(10, 20) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn segment_spacing() {
        let s = segment(101).unwrap().space;
        assert_eq!(s.len(), 101);
        assert!((s.dist(0, 1) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn l1_geodesic_is_exact() {
        let g = l1_geodesic(21).unwrap().space;
        assert_eq!(g.dist(3, 7), (7.0 / 20.0 - 3.0 / 20.0f64).abs());
        let e = l1_geodesic_embedded(21).unwrap().space;
        assert!((e.dist(3, 7) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn moran_examples() {
        assert!((moran_dimension(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-9);
        let s = moran_dimension(&[0.5, 0.5, 0.25, 0.25]).unwrap();
        assert!((s - (1.0 + 3f64.sqrt()).log2()).abs() < 1e-9);
        let k = moran_dimension(&[1.0 / 3.0; 4]).unwrap();
        assert!((k - 4f64.ln() / 3f64.ln()).abs() < 1e-9);
        assert_eq!(moran_dimension(&[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn snowflake_identity_and_bounds() {
        let s = segment(11).unwrap().space;
        let f = snowflake(&s, 1.0).unwrap();
        assert_eq!(f.distance_matrix(), s.distance_matrix());
        assert!(snowflake(&s, 1.5).is_err());
        let h = snowflake(&s, 0.5).unwrap();
        assert!((h.dist(0, 10) - 1.0).abs() < 1e-15);
        assert!((h.dist(0, 1) - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn koch_vertices() {
        let k = koch(2, 60.0).unwrap().space;
        assert_eq!(k.len(), 17);
        let z = zigzag(3, 20.0).unwrap().space;
        assert_eq!(z.len(), 9);
    }
}
