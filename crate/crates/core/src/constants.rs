//! The explicit constant chain of the dimension bound and its admissible
//! ranges, plus the looser desk-scale overrides used in experiments.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub const EPS_MAX: f64 = 1.0 / 12288.0;
pub const K_MAX: f64 = 1.0 / 4096.0;
pub const C_MAX: f64 = 1.0 / 64.0;
pub const BETA0: f64 = 1.0 / 356.0;
pub const C_PRIME_MAX: f64 = 0.125;

/// The smallest admissible κ reported for extremal inputs, 2⁻⁴¹.
pub fn kappa_reference() -> f64 {
    2f64.powi(-41)
}

/// Whether a run enforces the admissible ranges or uses desk-scale values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PaperConstants,
    #[default]
    Desk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperConstants {
    pub beta: f64,
    pub eps: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub c: f64,
    pub c_prime: f64,
    pub beta0: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub delta: f64,
    pub kappa: f64,
    /// ⌈8/(δβ²ε)⌉ as a float; astronomically large for admissible inputs.
    pub n0: f64,
    /// κ ≥ 2⁻⁴¹/4.
    pub feasible: bool,
}

impl PaperConstants {
    /// Derives M, δ, κ and n₀ from (β, ε, K, c), with c′ just below 1/8.
    pub fn derive(beta: f64, eps: f64, k: f64, c: f64) -> Result<PaperConstants> {
        Self::derive_with(beta, eps, k, c, C_PRIME_MAX * (1.0 - 1e-9))
    }

    pub fn derive_with(beta: f64, eps: f64, k: f64, c: f64, c_prime: f64) -> Result<PaperConstants> {
        if !(beta > 0.0 && beta <= BETA0) {
            return Err(param("beta", format!("need 0 < beta <= 1/356, got {beta}")));
        }
        if !(eps > 0.0 && eps < EPS_MAX) {
            return Err(param("eps", format!("need 0 < eps < 1/12288, got {eps}")));
        }
        if !(k > 0.0 && k < K_MAX) {
            return Err(param("K", format!("need 0 < K < 1/4096, got {k}")));
        }
        if !(c > 0.0 && c < C_MAX) {
            return Err(param("c", format!("need 0 < c < 1/64, got {c}")));
        }
        if !(c_prime > 0.0 && c_prime < C_PRIME_MAX) {
            return Err(param("c_prime", format!("need 0 < c' < 1/8, got {c_prime}")));
        }
        if c >= c_prime / 4.0 {
            return Err(param("c", format!("need c < c'/4 = {}, got {c}", c_prime / 4.0)));
        }
        let m = 8.0 / (eps * beta);
        let delta = k * c * eps / 80.0;
        let kappa = delta / 16.0;
        let n0 = (8.0 / (delta * beta * beta * eps)).ceil();
        Ok(PaperConstants {
            beta,
            eps,
            k,
            c,
            c_prime,
            beta0: BETA0,
            m,
            delta,
            kappa,
            n0,
            feasible: kappa >= kappa_reference() / 4.0,
        })
    }

    /// The exponent 1 + κβ² that net counts must reach.
    pub fn growth_target(&self) -> f64 {
        1.0 + self.kappa * self.beta * self.beta
    }
}

/// Desk-scale substitutes for (M, n₀, κβ², c′) in count-growth experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeskConstants {
    #[serde(rename = "M")]
    pub m: f64,
    pub n0: u32,
    pub kappa_beta2: f64,
    pub c_prime: f64,
}

impl DeskConstants {
    pub fn growth_target(&self) -> f64 {
        1.0 + self.kappa_beta2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extremal() -> PaperConstants {
        let s = 1.0 - 1e-9;
        PaperConstants::derive(BETA0, EPS_MAX * s, K_MAX * s, C_MAX * s).unwrap()
    }

    #[test]
    fn kappa_near_reference() {
        let p = extremal();
        let ratio = p.kappa / kappa_reference();
        assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
        assert!(p.feasible);
    }

    #[test]
    fn formulas_recompute() {
        let p = extremal();
        let delta = p.k * p.c * p.eps / 80.0;
        assert!(((p.delta - delta) / delta).abs() < 1e-15);
        assert_eq!(p.n0, (8.0 / (delta * p.beta * p.beta * p.eps)).ceil());
        assert!(p.n0 >= 1.0);
        assert!(p.m > 4.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(PaperConstants::derive(0.01, 1e-5, 1e-4, 1e-3).is_err());
        assert!(PaperConstants::derive(BETA0, EPS_MAX, 1e-4, 1e-3).is_err());
        assert!(PaperConstants::derive(BETA0, 1e-5, K_MAX, 1e-3).is_err());
        assert!(PaperConstants::derive(BETA0, 1e-5, 1e-4, C_MAX).is_err());
    }
}
