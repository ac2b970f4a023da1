//! β values on every ball B(x, A·M⁻ⁿ) with x in the net X_n.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::hat::beta_hat;
use crate::beta::jones::jones_beta;
use crate::beta::prime::{beta_double_prime, beta_prime_with_hat};
use crate::beta::{BetaKind, BetaValue, Bound, SearchConfig, Witness};
use crate::error::{param, Error, Result};
use crate::metric::{MetricSpace, Norm};
use crate::nets::NetHierarchy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub level: i32,
    pub point_index: usize,
    pub radius: f64,
    pub kind: BetaKind,
    pub value: f64,
    pub bound: Bound,
    pub witness: Option<Witness>,
    /// Set when the ball was too small to score; the value is then 0.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaProfile {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub rows: Vec<ProfileRow>,
}

/// Formats `v` with 12 significant digits.
pub fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

impl BetaProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,point_index,radius,kind,value,bound,witness_json\n");
        for r in &self.rows {
            let w = if r.degenerate {
                "{\"degenerate\":true}".to_string()
            } else {
                serde_json::to_string(&r.witness).unwrap_or_else(|_| "null".into())
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.level,
                r.point_index,
                sig12(r.radius),
                r.kind.name(),
                sig12(r.value),
                r.bound.name(),
                csv_quote(&w)
            ));
        }
        out
    }

    pub fn rows_of(&self, kind: BetaKind) -> impl Iterator<Item = &ProfileRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }
}

/// All requested kinds on one ball, in the order given.
pub fn ball_values(
    space: &MetricSpace,
    center: usize,
    radius: f64,
    kinds: &[BetaKind],
    cfg: &SearchConfig,
) -> Result<Vec<(BetaValue, bool)>> {
    let ball = space.ball(center, radius)?;
    let need_hat = kinds.iter().any(|k| matches!(k, BetaKind::Hat | BetaKind::Prime));
    let hat: Option<std::result::Result<BetaValue, String>> = if need_hat {
        match beta_hat(&ball, space, cfg) {
            Ok(v) => Some(Ok(v)),
            Err(Error::Degenerate(m)) => Some(Err(m)),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let v = match (kind, &hat) {
            (BetaKind::Jones, _) => jones_beta(&ball, space),
            (BetaKind::DoublePrime, _) => beta_double_prime(&ball, space, cfg),
            (_, Some(Err(m))) => Err(Error::Degenerate(m.clone())),
            (BetaKind::Hat, Some(Ok(h))) => Ok(h.clone()),
            (BetaKind::Prime, Some(Ok(h))) => beta_prime_with_hat(&ball, space, cfg, h),
            (_, None) => unreachable!("hat computed for hat and prime"),
        };
        let v = if ball.len() < 2 {
            Err(Error::Degenerate(format!("ball around {center} holds one point")))
        } else {
            v
        };
        out.push(match v {
            Ok(v) => (v, false),
            Err(Error::Degenerate(_)) => (
                BetaValue {
                    kind,
                    value: 0.0,
                    bound: Bound::Exact,
                    witness: None,
                },
                true,
            ),
            Err(e) => return Err(e),
        });
    }
    Ok(out)
}

/// Computes the requested kinds on B(x, A·M⁻ⁿ) for every level n and every
/// x in X_n. Rows come out ordered by level, then net order, then kind as
/// listed.
pub fn multiscale_profile(
    space: &MetricSpace,
    hier: &NetHierarchy,
    a: f64,
    kinds: &[BetaKind],
    cfg: &SearchConfig,
) -> Result<BetaProfile> {
    if !(a >= 1.0) {
        return Err(param("A", format!("need A >= 1, got {a}")));
    }
    cfg.validate()?;
    let needs_euclid = kinds.iter().any(|k| matches!(k, BetaKind::Jones | BetaKind::DoublePrime));
    if needs_euclid && space.norm() != Some(Norm::Euclidean) {
        return Err(param("kinds", "jones and double_prime need euclidean coordinates"));
    }
    let tasks: Vec<(i32, usize)> = (hier.n_min..=hier.n_max)
        .flat_map(|n| hier.level(n).unwrap().iter().map(move |&x| (n, x)))
        .collect();
    let per_ball: Vec<Result<Vec<ProfileRow>>> = tasks
        .par_iter()
        .map(|&(n, x)| {
            let radius = a * hier.scale(n);
            let vals = ball_values(space, x, radius, kinds, cfg)?;
            Ok(vals
                .into_iter()
                .map(|(v, degenerate)| ProfileRow {
                    level: n,
                    point_index: x,
                    radius,
                    kind: v.kind,
                    value: v.value,
                    bound: v.bound,
                    witness: v.witness,
                    degenerate,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_ball {
        rows.extend(r?);
    }
    Ok(BetaProfile { a, m: hier.m, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::CandidateSource;
    use crate::fractal;

    fn all_points() -> SearchConfig {
        SearchConfig {
            candidate_source: CandidateSource::AllBallPoints,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn segment_profile_is_flat() {
        let s = fractal::segment(33).unwrap().space;
        let h = NetHierarchy::build(&s, 2.0, 0, 3, 0).unwrap();
        let kinds = [BetaKind::Jones, BetaKind::Hat, BetaKind::Prime, BetaKind::DoublePrime];
        let p = multiscale_profile(&s, &h, 1.5, &kinds, &all_points()).unwrap();
        assert_eq!(p.rows.len(), 4 * h.levels.iter().map(|l| l.len()).sum::<usize>());
        assert!(p.rows.iter().all(|r| r.value < 1e-9), "{:?}", p.rows.iter().map(|r| r.value).fold(0.0, f64::max));
    }

    #[test]
    fn l1_geodesic_rows_vanish() {
        let s = fractal::l1_geodesic(17).unwrap().space;
        let h = NetHierarchy::build(&s, 2.0, 0, 3, 0).unwrap();
        let p = multiscale_profile(&s, &h, 2.0, &[BetaKind::Hat, BetaKind::Prime], &all_points()).unwrap();
        assert!(p.rows.iter().all(|r| r.value < 1e-9));
    }

    #[test]
    fn csv_shape() {
        let s = fractal::segment(9).unwrap().space;
        let h = NetHierarchy::build(&s, 2.0, 0, 1, 0).unwrap();
        let p = multiscale_profile(&s, &h, 1.0, &[BetaKind::Hat], &SearchConfig::default()).unwrap();
        let csv = p.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "level,point_index,radius,kind,value,bound,witness_json");
        assert_eq!(lines.count(), p.rows.len());
        assert_eq!(sig12(0.1), "0.100000000000");
        assert_eq!(sig12(1234.5), "1234.50000000");
    }

    #[test]
    fn rejects_small_a() {
        let s = fractal::segment(9).unwrap().space;
        let h = NetHierarchy::build(&s, 2.0, 0, 1, 0).unwrap();
        assert!(multiscale_profile(&s, &h, 0.5, &[BetaKind::Hat], &SearchConfig::default()).is_err());
    }
}
