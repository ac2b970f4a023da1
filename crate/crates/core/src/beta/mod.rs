//! β-type flatness quantities on balls of a finite metric space.
//!
//! Jones' β is the scaled width of the thinnest tube around the ball's
//! points. β̂ and β′ measure how far the points are from lying near a
//! geodesic: a sequence (β̂) or a curve in the ambient space (β′) is charged
//! its excess length over the endpoint gap plus its covering radius, both
//! relative to the gap. β″ takes the square root of the excess term.

pub mod antenna;
pub mod hat;
pub mod jones;
pub mod prime;
pub mod profile;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Jones,
    Hat,
    Prime,
    DoublePrime,
}

impl BetaKind {
    pub fn name(self) -> &'static str {
        match self {
            BetaKind::Jones => "jones",
            BetaKind::Hat => "hat",
            BetaKind::Prime => "prime",
            BetaKind::DoublePrime => "double_prime",
        }
    }

    pub fn parse(s: &str) -> Option<BetaKind> {
        match s {
            "jones" => Some(BetaKind::Jones),
            "hat" => Some(BetaKind::Hat),
            "prime" => Some(BetaKind::Prime),
            "double_prime" | "double-prime" => Some(BetaKind::DoublePrime),
            _ => None,
        }
    }

    /// Parses a comma-separated list such as `hat,prime`.
    pub fn parse_list(s: &str) -> Result<Vec<BetaKind>> {
        s.split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| BetaKind::parse(t).ok_or_else(|| param("kinds", format!("unknown kind `{t}`"))))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Exact,
    Upper,
    HeuristicLower,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::Exact => "exact",
            Bound::Upper => "upper",
            Bound::HeuristicLower => "heuristic_lower",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// A line through `point` with unit `direction`.
    Line { point: Vec<f64>, direction: Vec<f64> },
    /// An ordered sequence of point indices.
    Sequence(Vec<usize>),
    /// A polygonal path through ambient vertices.
    Path(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaValue {
    pub kind: BetaKind,
    pub value: f64,
    pub bound: Bound,
    pub witness: Option<Witness>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    NetPoints,
    AllBallPoints,
}

/// Knobs for the β̂ and β′ searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub candidate_source: CandidateSource,
    /// Longest sequence considered, in points.
    pub max_sequence_length: usize,
    /// Candidate sets up to this size are searched exhaustively (at most 12).
    pub exhaustive_threshold: usize,
    pub local_search_iters: usize,
    pub seed: u64,
    /// Net-point candidates are a farthest-point net of the ball at this
    /// fraction of the radius.
    pub net_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            candidate_source: CandidateSource::NetPoints,
            max_sequence_length: 64,
            exhaustive_threshold: 8,
            local_search_iters: 200,
            seed: 0,
            net_fraction: 0.25,
        }
    }
}

/// Length excess ℓ − gap of a path, with summation rounding (relative
/// 1e-13 of the length) read as exactly 0.
pub(crate) fn length_excess(len: f64, gap: f64) -> f64 {
    let e = len - gap;
    if e <= 1e-13 * len {
        0.0
    } else {
        e
    }
}

/// Hard cap on the exhaustive threshold.
pub const MAX_EXHAUSTIVE: usize = 12;

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.exhaustive_threshold > MAX_EXHAUSTIVE {
            return Err(param(
                "exhaustive_threshold",
                format!("at most {MAX_EXHAUSTIVE}, got {}", self.exhaustive_threshold),
            ));
        }
        if self.max_sequence_length < 2 {
            return Err(param("max_sequence_length", "need at least 2"));
        }
        if !(self.net_fraction > 0.0 && self.net_fraction <= 1.0) {
            return Err(param("net_fraction", format!("must lie in (0, 1], got {}", self.net_fraction)));
        }
        Ok(())
    }
}
