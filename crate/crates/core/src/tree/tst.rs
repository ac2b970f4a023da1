//! Multiscale β sums and net-count growth.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::profile::{ball_values, sig12};
use crate::beta::{BetaKind, SearchConfig};
use crate::constants::{DeskConstants, PaperConstants};
use crate::error::{param, Result};
use crate::metric::MetricSpace;
use crate::nets::NetHierarchy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSum {
    pub level: i32,
    /// Number of net points at the level.
    pub count: usize,
    /// Σ_{x ∈ X_n} β²(x, A·M⁻ⁿ)·M⁻ⁿ.
    pub increment: f64,
    /// diam plus every increment up to this level.
    pub partial_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSumReport {
    pub kind: BetaKind,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub diam: f64,
    pub levels: Vec<LevelSum>,
    pub total: f64,
    /// False when the hierarchy uses M ≠ 2.
    pub dyadic: bool,
}

impl BetaSumReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,count,increment,partial_sum\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{}\n",
                l.level,
                l.count,
                sig12(l.increment),
                sig12(l.partial_sum)
            ));
        }
        out
    }
}

/// diam X + Σ_n Σ_{x ∈ X_n} β²(x, A·M⁻ⁿ)·M⁻ⁿ over the hierarchy's levels.
pub fn beta_sum(
    space: &MetricSpace,
    hier: &NetHierarchy,
    a: f64,
    kind: BetaKind,
    cfg: &SearchConfig,
) -> Result<BetaSumReport> {
    if !(a > 1.0) {
        return Err(param("A", format!("need A > 1, got {a}")));
    }
    let dyadic = hier.m == 2.0;
    if !dyadic {
        warn!("beta sum over M = {} instead of dyadic scales", hier.m);
    }
    let diam = space.diameter();
    let mut levels = Vec::new();
    let mut running = diam;
    for n in hier.n_min..=hier.n_max {
        let net = hier.level(n).unwrap();
        let scale = hier.scale(n);
        let values: Vec<Result<f64>> = net
            .par_iter()
            .map(|&x| {
                let v = ball_values(space, x, a * scale, &[kind], cfg)?;
                Ok(v[0].0.value)
            })
            .collect();
        let mut sq = Vec::with_capacity(values.len());
        for v in values {
            let b = v?;
            sq.push(b * b * scale);
        }
        let increment: f64 = sq.iter().sum();
        running += increment;
        levels.push(LevelSum {
            level: n,
            count: net.len(),
            increment,
            partial_sum: running,
        });
    }
    Ok(BetaSumReport {
        kind,
        a,
        m: hier.m,
        diam,
        levels,
        total: running,
        dyadic,
    })
}

/// Constants for the count-growth comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GrowthConstants {
    Paper(PaperConstants),
    Desk(DeskConstants),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub mode: String,
    pub x0: usize,
    pub n: i32,
    /// 1 + κβ².
    pub target: f64,
    pub count: Option<usize>,
    /// log_M(count)/n₀; −∞ when the ball holds no finer net point.
    pub exponent: Option<f64>,
    /// log_M(#X_{n+n₀})/n₀, the largest exponent any ball can show.
    pub cardinality_cap: Option<f64>,
    pub holds: Option<bool>,
    pub note: String,
}

/// Measures e = log_M(#(X_{n+n₀} ∩ B(x₀, c′M⁻ⁿ)))/n₀ against 1 + κβ².
///
/// With admissible constants n₀ is astronomically large, so that mode only
/// reports the target. Desk constants must match the hierarchy's M.
pub fn count_growth_check(
    space: &MetricSpace,
    hier: &NetHierarchy,
    x0: usize,
    n: i32,
    constants: &GrowthConstants,
) -> Result<GrowthReport> {
    if !hier.contains(n, x0) {
        return Err(param("x0", format!("point {x0} is not in X_{n}")));
    }
    match constants {
        GrowthConstants::Paper(p) => Ok(GrowthReport {
            mode: "paper_constants".into(),
            x0,
            n,
            target: p.growth_target(),
            count: None,
            exponent: None,
            cardinality_cap: None,
            holds: None,
            note: format!(
                "n0 = {:e} levels below {n} are beyond any sample; compare #X_(n+n0) ∩ B(x0, {}·M^-n) with M^({}·n0) symbolically",
                p.n0,
                p.c_prime,
                p.growth_target()
            ),
        }),
        GrowthConstants::Desk(d) => {
            if d.m != hier.m {
                return Err(param("M", format!("desk M = {} but the hierarchy uses {}", d.m, hier.m)));
            }
            let n0 = d.n0 as i32;
            if n0 < 1 {
                return Err(param("n0", "need n0 >= 1"));
            }
            let fine = hier.level(n + n0).ok_or_else(|| {
                param("n", format!("level {} is not in the hierarchy (max {})", n + n0, hier.n_max))
            })?;
            let diam = space.diameter();
            if !(hier.scale(n) < diam / 2.0) {
                return Err(param("n", format!("need M^-n = {} below diam/2 = {}", hier.scale(n), diam / 2.0)));
            }
            let radius = d.c_prime * hier.scale(n);
            let count = fine.iter().filter(|&&p| space.dist(x0, p) < radius).count();
            let ln_m = d.m.ln();
            let exponent = if count == 0 { f64::NEG_INFINITY } else { (count as f64).ln() / ln_m / n0 as f64 };
            let cap = (fine.len() as f64).ln() / ln_m / n0 as f64;
            Ok(GrowthReport {
                mode: "desk".into(),
                x0,
                n,
                target: d.growth_target(),
                count: Some(count),
                exponent: Some(exponent),
                cardinality_cap: Some(cap),
                holds: Some(exponent >= d.growth_target()),
                note: if count == 0 {
                    format!("no point of X_{} within {radius} of {x0}", n + n0)
                } else {
                    String::new()
                },
            })
        }
    }
}
