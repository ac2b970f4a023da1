use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::svg::{self, ReportData};
use super::{from_value_at, provenance, provenance_sidecar, read_text, sha256_hex, to_json_text, write_out, Command, Ctx};
use crate::beta::antenna::{antenna_constant_with, connectivity_scale, AntennaOptions, AntennaWitness};
use crate::beta::profile::{ball_values, multiscale_profile, BetaProfile, ProfileRow};
use crate::beta::{BetaKind, CandidateSource, SearchConfig};
use crate::constants::{Mode, PaperConstants, C_MAX, EPS_MAX};
use crate::cubes::CubeTree;
use crate::error::{param, Error, Result};
use crate::fractal::{generate_named, snowflake};
use crate::measure::dimension::{box_dimension, geometric_scales};
use crate::measure::frostmann::{build_frostmann, frostmann_exponent, NetTree};
use crate::measure::martingale::{mark_bad_cubes, martingale_weights, TreeTrace};
use crate::metric::{MetricSpace, PointSetDoc};
use crate::nets::NetHierarchy;
use crate::tree::excess::flatten_and_excess;
use crate::tree::graph::{length_points_check, TreeGraph};
use crate::tree::tour::euler_tour;
use crate::tree::tst::beta_sum;

pub(crate) fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(ctx, ctx.resolve(a)?),
        Command::Nets(a) => nets(ctx, ctx.resolve(a)?),
        Command::Cubes(a) => cubes(ctx, ctx.resolve(a)?),
        Command::Beta(a) => beta(ctx, ctx.resolve(a)?),
        Command::Tree(a) => tree(ctx, ctx.resolve(a)?),
        Command::Tst(a) => tst(ctx, ctx.resolve(a)?),
        Command::Dim(a) => dim(ctx, ctx.resolve(a)?),
        Command::Antenna(a) => antenna(ctx, ctx.resolve(a)?),
        Command::Martingale(a) => martingale(ctx, ctx.resolve(a)?),
        Command::Report(a) => report(ctx, ctx.resolve(a)?),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Schema {
        field: key.into(),
        reason: "a path is required".into(),
    })
}

/// Reads a point-set document; returns the space and the file's hash.
fn load_space(path: &Path) -> Result<(MetricSpace, String)> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Schema {
        field: path.display().to_string(),
        reason: format!("not valid JSON: {e}"),
    })?;
    let doc: PointSetDoc = from_value_at(value)?;
    Ok((doc.to_space()?, sha256_hex(text.as_bytes())))
}

fn inputs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn write_json_doc(out: Option<&Path>, prov: Value, result: impl Serialize) -> Result<()> {
    let doc = json!({ "provenance": prov, "result": serde_json::to_value(result)? });
    write_out(out, &to_json_text(&doc))
}

/// CSV goes to `out`, its provenance to the sidecar next to it.
fn write_csv(out: Option<&Path>, prov: Value, csv: &str) -> Result<()> {
    write_out(out, csv)?;
    if let Some(p) = out {
        write_out(Some(&provenance_sidecar(p)), &to_json_text(&json!({ "provenance": prov })))?;
    }
    Ok(())
}

fn hierarchy(space: &MetricSpace, m: f64, n_min: i32, n_max: i32, start: usize) -> Result<NetHierarchy> {
    NetHierarchy::build(space, m, n_min, n_max, start)
}

/// Paper mode only admits core fractions below 1/64.
fn check_core_fraction(mode: Mode, c: f64) -> Result<()> {
    if mode == Mode::PaperConstants && !(c > 0.0 && c < C_MAX) {
        return Err(param("c", format!("paper_constants mode needs 0 < c < 1/64, got {c}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- gen

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenArgs {
    /// segment, antenna, koch, zigzag, tripod, tripod_path, l1_geodesic, l1_geodesic_embedded
    #[arg(long)]
    fractal: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    angle: Option<f64>,
    /// Snowflake exponent: replaces d by d^gamma.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct GenConfig {
    fractal: Option<String>,
    resolution: usize,
    depth: u32,
    alpha: f64,
    angle: Option<f64>,
    gamma: Option<f64>,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            fractal: None,
            resolution: 101,
            depth: 5,
            alpha: 0.25,
            angle: None,
            gamma: None,
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn gen(ctx: &Ctx, cfg: GenConfig) -> Result<()> {
    let name = cfg.fractal.as_deref().ok_or_else(|| Error::Schema {
        field: "fractal".into(),
        reason: "a generator name is required".into(),
    })?;
    let g = generate_named(name, cfg.resolution, cfg.depth, cfg.alpha, cfg.angle)?;
    let space = match cfg.gamma {
        Some(gamma) => snowflake(&g.space, gamma)?,
        None => g.space,
    };
    let mut prov = provenance(ctx.command, &cfg, &BTreeMap::new())?;
    prov["generator"] = serde_json::to_value(&g.provenance)?;
    let mut doc = PointSetDoc::from_space(&space);
    doc.provenance = Some(prov);
    write_out(cfg.out.as_deref(), &to_json_text(&serde_json::to_value(&doc)?))
}

// ---------------------------------------------------------------- nets

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NetsArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long)]
    n_min: Option<i32>,
    #[arg(long)]
    n_max: Option<i32>,
    /// Index of the point that starts the farthest-point pass.
    #[arg(long)]
    start: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct NetsConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[serde(rename = "M")]
    m: f64,
    n_min: i32,
    n_max: i32,
    start: usize,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for NetsConfig {
    fn default() -> Self {
        NetsConfig {
            input: None,
            m: 4.0,
            n_min: 0,
            n_max: 5,
            start: 0,
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn nets(ctx: &Ctx, cfg: NetsConfig) -> Result<()> {
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let h = hierarchy(&space, cfg.m, cfg.n_min, cfg.n_max, cfg.start)?;
    let report = h.verify(&space);
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_json_doc(cfg.out.as_deref(), prov, json!({ "hierarchy": h, "report": report }))
}

// ---------------------------------------------------------------- cubes

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CubesArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    /// Core fraction.
    #[arg(long)]
    c: Option<f64>,
    /// Defaults to the level whose single core covers the space.
    #[arg(long)]
    n_min: Option<i32>,
    #[arg(long)]
    n_max: Option<i32>,
    #[arg(long)]
    start: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct CubesConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[serde(rename = "M")]
    m: f64,
    c: f64,
    n_min: Option<i32>,
    n_max: i32,
    start: usize,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for CubesConfig {
    fn default() -> Self {
        CubesConfig {
            input: None,
            m: 4.0,
            c: 0.1,
            n_min: None,
            n_max: 4,
            start: 0,
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn cubes(ctx: &Ctx, cfg: CubesConfig) -> Result<()> {
    check_core_fraction(cfg.mode, cfg.c)?;
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let top = cfg.n_min.unwrap_or_else(|| CubeTree::covering_level(space.diameter(), cfg.m, cfg.c));
    let h = hierarchy(&space, cfg.m, top, cfg.n_max, cfg.start)?;
    let tree = CubeTree::build(&space, &h, cfg.c)?;
    let report = tree.verify(&space);
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_json_doc(cfg.out.as_deref(), prov, json!({ "cubes": tree, "report": report }))
}

// ---------------------------------------------------------------- search flags shared by beta and tst

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SearchArgs {
    /// net_points or all_ball_points.
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    exhaustive_threshold: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    net_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Command-line search defaults. All ball points up to 128 are used as
/// candidates so that straight inputs read exactly 0.
#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct SearchSettings {
    candidates: CandidateSource,
    max_len: usize,
    exhaustive_threshold: usize,
    iters: usize,
    net_fraction: f64,
    seed: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let d = SearchConfig::default();
        SearchSettings {
            candidates: CandidateSource::AllBallPoints,
            max_len: 128,
            exhaustive_threshold: d.exhaustive_threshold,
            iters: d.local_search_iters,
            net_fraction: d.net_fraction,
            seed: d.seed,
        }
    }
}

impl SearchSettings {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            candidate_source: self.candidates,
            max_sequence_length: self.max_len,
            exhaustive_threshold: self.exhaustive_threshold,
            local_search_iters: self.iters,
            seed: self.seed,
            net_fraction: self.net_fraction,
        }
    }
}

// ---------------------------------------------------------------- beta

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BetaArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    /// Comma-separated list of jones, hat, prime, double_prime.
    #[arg(long)]
    kinds: Option<String>,
    #[arg(long = "A")]
    #[serde(rename = "A")]
    a: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long)]
    n_min: Option<i32>,
    #[arg(long)]
    n_max: Option<i32>,
    #[arg(long)]
    start: Option<usize>,
    /// Output of `antenna`: score exactly those balls instead of the net balls.
    #[arg(long)]
    balls: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct BetaConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    kinds: String,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "M")]
    m: f64,
    n_min: i32,
    n_max: i32,
    start: usize,
    balls: Option<PathBuf>,
    #[serde(flatten)]
    search: SearchSettings,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for BetaConfig {
    fn default() -> Self {
        BetaConfig {
            input: None,
            kinds: "hat,prime".into(),
            a: 2.0,
            m: 2.0,
            n_min: 0,
            n_max: 4,
            start: 0,
            balls: None,
            search: SearchSettings::default(),
            mode: Mode::Desk,
            out: None,
        }
    }
}

/// Balls listed by an `antenna` output: `result.balls[*].{x, r}`.
fn read_balls(path: &Path) -> Result<(Vec<(usize, f64)>, String)> {
    let text = read_text(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Schema {
        field: path.display().to_string(),
        reason: format!("not valid JSON: {e}"),
    })?;
    let list = v
        .pointer("/result/balls")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema {
            field: "result.balls".into(),
            reason: "expected the output of `antenna`".into(),
        })?;
    let mut out = Vec::with_capacity(list.len());
    for (i, b) in list.iter().enumerate() {
        let x = b.get("x").and_then(Value::as_u64);
        let r = b.get("r").and_then(Value::as_f64);
        match (x, r) {
            (Some(x), Some(r)) => out.push((x as usize, r)),
            _ => {
                return Err(Error::Schema {
                    field: format!("result.balls[{i}]"),
                    reason: "each ball needs an integer `x` and a number `r`".into(),
                })
            }
        }
    }
    Ok((out, sha256_hex(text.as_bytes())))
}

fn beta(ctx: &Ctx, cfg: BetaConfig) -> Result<()> {
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let kinds = BetaKind::parse_list(&cfg.kinds)?;
    let search = cfg.search.config();
    let mut ins = vec![("in", hash)];
    let profile = match &cfg.balls {
        None => {
            let h = hierarchy(&space, cfg.m, cfg.n_min, cfg.n_max, cfg.start)?;
            multiscale_profile(&space, &h, cfg.a, &kinds, &search)?
        }
        Some(p) => {
            search.validate()?;
            let (balls, bh) = read_balls(p)?;
            ins.push(("balls", bh));
            let mut rows = Vec::new();
            for (x, r) in balls {
                space.check_index(x)?;
                // the level whose ball radius A·M⁻ⁿ is closest to r
                let level = ((cfg.a / r).ln() / cfg.m.ln()).round() as i32;
                for (v, degenerate) in ball_values(&space, x, r, &kinds, &search)? {
                    rows.push(ProfileRow {
                        level,
                        point_index: x,
                        radius: r,
                        kind: v.kind,
                        value: v.value,
                        bound: v.bound,
                        witness: v.witness,
                        degenerate,
                    });
                }
            }
            BetaProfile { a: cfg.a, m: cfg.m, rows }
        }
    };
    let ins: Vec<(&str, &str)> = ins.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let prov = provenance(ctx.command, &cfg, &inputs(&ins))?;
    write_csv(cfg.out.as_deref(), prov, &profile.to_csv())
}

// ---------------------------------------------------------------- tst

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TstArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    /// One of jones, hat, prime, double_prime.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long = "A")]
    #[serde(rename = "A")]
    a: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long)]
    n_min: Option<i32>,
    #[arg(long)]
    n_max: Option<i32>,
    #[arg(long)]
    start: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct TstConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    kind: String,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "M")]
    m: f64,
    n_min: i32,
    n_max: i32,
    start: usize,
    #[serde(flatten)]
    search: SearchSettings,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for TstConfig {
    fn default() -> Self {
        TstConfig {
            input: None,
            kind: "prime".into(),
            a: 2.0,
            m: 2.0,
            n_min: 0,
            n_max: 6,
            start: 0,
            search: SearchSettings {
                candidates: CandidateSource::NetPoints,
                max_len: SearchConfig::default().max_sequence_length,
                ..SearchSettings::default()
            },
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn tst(ctx: &Ctx, cfg: TstConfig) -> Result<()> {
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let kind = BetaKind::parse(&cfg.kind).ok_or_else(|| param("kind", format!("unknown β kind `{}`", cfg.kind)))?;
    let h = hierarchy(&space, cfg.m, cfg.n_min, cfg.n_max, cfg.start)?;
    let rep = beta_sum(&space, &h, cfg.a, kind, &cfg.search.config())?;
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_csv(cfg.out.as_deref(), prov, &rep.to_csv())
}

// ---------------------------------------------------------------- tree

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TreeArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long)]
    n0: Option<i32>,
    /// Core fraction of the cubes used for the excess.
    #[arg(long)]
    c: Option<f64>,
    /// Require 4M^-n0 < diam/4.
    #[arg(long)]
    enforce_scale: Option<bool>,
    /// Random (x, r) pairs for the length-versus-points check.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    start: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct TreeConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[serde(rename = "M")]
    m: f64,
    n0: i32,
    c: f64,
    enforce_scale: bool,
    samples: usize,
    seed: u64,
    start: usize,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            input: None,
            m: 4.0,
            n0: 3,
            c: 0.1,
            enforce_scale: true,
            samples: 50,
            seed: 0,
            start: 0,
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn tree(ctx: &Ctx, cfg: TreeConfig) -> Result<()> {
    check_core_fraction(cfg.mode, cfg.c)?;
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let top = CubeTree::covering_level(space.diameter(), cfg.m, cfg.c);
    let h = hierarchy(&space, cfg.m, top.min(cfg.n0), cfg.n0, cfg.start)?;
    let t = TreeGraph::build_with(&space, &h, cfg.n0, cfg.enforce_scale)?;
    let check = t.check();
    let tour = euler_tour(&t)?;

    let scale = t.scale();
    let (lo, hi) = (4.0 * scale, space.diameter_of(&t.nodes) / 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    if lo < hi {
        for _ in 0..cfg.samples {
            let x = t.nodes[rng.gen_range(0..t.nodes.len())];
            let r = rng.gen_range(lo..hi);
            checks.push(length_points_check(&t, &space, x, r)?);
        }
    }
    let cubes = CubeTree::build(&space, &h, cfg.c)?;
    let excess = flatten_and_excess(&space, &t, &tour, &cubes, cfg.n0)?;
    let result = json!({
        "tree": t,
        "check": check,
        "tour_length": tour.length,
        "tour_minus_twice_tree": tour.length - 2.0 * t.total_length,
        "length_points": checks,
        "length_points_hold": checks.iter().all(|c| c.holds),
        "excess": excess,
    });
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_json_doc(cfg.out.as_deref(), prov, result)
}

// ---------------------------------------------------------------- dim

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DimArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    /// boxcount or frostmann.
    #[arg(long)]
    method: Option<String>,
    /// Largest box-counting scale.
    #[arg(long)]
    hi: Option<f64>,
    /// Smallest box-counting scale.
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long)]
    n_max: Option<i32>,
    /// Levels per measure generation.
    #[arg(long)]
    n0: Option<u32>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "C-cap")]
    #[serde(rename = "C-cap")]
    c_cap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct DimConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    method: String,
    hi: Option<f64>,
    lo: Option<f64>,
    count: usize,
    #[serde(rename = "M")]
    m: f64,
    n_max: i32,
    n0: u32,
    r_min: Option<f64>,
    r_max: Option<f64>,
    samples: usize,
    #[serde(rename = "C-cap")]
    c_cap: f64,
    seed: u64,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for DimConfig {
    fn default() -> Self {
        DimConfig {
            input: None,
            method: "boxcount".into(),
            hi: None,
            lo: None,
            count: 12,
            m: 4.0,
            n_max: 6,
            n0: 2,
            r_min: None,
            r_max: None,
            samples: 400,
            c_cap: 100.0,
            seed: 0,
            mode: Mode::Desk,
            out: None,
        }
    }
}

/// Default box-counting range: from diam/4 down to twice the sample
/// spacing (the connectivity scale), kept between 1.5 and 3 decades.
fn default_box_range(space: &MetricSpace) -> (f64, f64) {
    let hi = space.diameter() / 4.0;
    let all: Vec<usize> = (0..space.len()).collect();
    let lo = (2.0 * connectivity_scale(space, &all)).clamp(hi * 1e-3, hi * 10f64.powf(-1.5));
    (hi, lo)
}

fn dim(ctx: &Ctx, cfg: DimConfig) -> Result<()> {
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let result = match cfg.method.as_str() {
        "boxcount" => {
            let (dhi, dlo) = default_box_range(&space);
            let scales = geometric_scales(cfg.hi.unwrap_or(dhi), cfg.lo.unwrap_or(dlo), cfg.count);
            serde_json::to_value(box_dimension(&space, &scales)?)?
        }
        "frostmann" => {
            let diam = space.diameter();
            if !(diam > 0.0) {
                return Err(Error::Degenerate("a single point carries no Frostmann fit".into()));
            }
            // one level above the first scale below diam, so the top net is a single point
            let n_min = (-diam.ln() / cfg.m.ln()).floor() as i32 - 1;
            let h = hierarchy(&space, cfg.m, n_min, cfg.n_max, 0)?;
            let nt = NetTree::build(&space, &h);
            let root = nt.root().ok_or_else(|| Error::Degenerate("the top net has several points".into()))?;
            let mu = build_frostmann(&nt, cfg.n0, root)?;
            let r_max = cfg.r_max.unwrap_or((diam / 2.0).min(1.0));
            let r_min = cfg.r_min.unwrap_or(2.0 * h.scale(cfg.n_max));
            let fit = frostmann_exponent(&mu, &nt, &space, r_min, r_max, cfg.samples, cfg.c_cap, cfg.seed)?;
            json!({
                "method": "frostmann",
                "estimate": fit.s,
                "fit": fit,
                "conservation_error": mu.conservation_error(&nt),
                "generations": mu.deepest_generation,
            })
        }
        other => return Err(param("method", format!("`{other}` is not boxcount or frostmann"))),
    };
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_json_doc(cfg.out.as_deref(), prov, result)
}

// ---------------------------------------------------------------- antenna

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct AntennaArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Smallest sampled radius as a fraction of the diameter.
    #[arg(long)]
    r_min_frac: Option<f64>,
    /// Largest sampled radius as a fraction of the diameter (below 1/2).
    #[arg(long)]
    r_max_frac: Option<f64>,
    /// ε of the ε-graph (default: the connectivity scale of the whole set).
    #[arg(long)]
    graph_scale: Option<f64>,
    #[arg(long)]
    tips: Option<usize>,
    #[arg(long)]
    branches: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct AntennaConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    samples: usize,
    seed: u64,
    r_min_frac: f64,
    r_max_frac: f64,
    graph_scale: Option<f64>,
    tips: usize,
    branches: usize,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        let o = AntennaOptions::default();
        AntennaConfig {
            input: None,
            samples: 50,
            seed: 0,
            r_min_frac: 0.05,
            r_max_frac: 0.45,
            graph_scale: None,
            tips: o.tips,
            branches: o.branches,
            mode: Mode::Desk,
            out: None,
        }
    }
}

/// One scored ball of the `antenna` command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AntennaBall {
    pub x: usize,
    pub r: f64,
    pub witness: AntennaWitness,
}

/// `count` balls B(x, r) with x uniform over the points and r uniform in
/// [r_min_frac, r_max_frac)·diam, from a ChaCha8 stream seeded with `seed`.
pub fn sample_antenna_balls(
    space: &MetricSpace,
    count: usize,
    seed: u64,
    r_min_frac: f64,
    r_max_frac: f64,
) -> Result<Vec<(usize, f64)>> {
    if !(r_min_frac > 0.0 && r_min_frac < r_max_frac && r_max_frac < 0.5) {
        return Err(param(
            "r_min_frac",
            format!("need 0 < r_min_frac < r_max_frac < 1/2, got {r_min_frac}, {r_max_frac}"),
        ));
    }
    if space.is_empty() {
        return Err(Error::Degenerate("no points to sample".into()));
    }
    let diam = space.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let x = rng.gen_range(0..space.len());
            let r = rng.gen_range(r_min_frac..r_max_frac) * diam;
            (x, r)
        })
        .collect())
}

fn antenna(ctx: &Ctx, cfg: AntennaConfig) -> Result<()> {
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let all: Vec<usize> = (0..space.len()).collect();
    let eps = match cfg.graph_scale {
        Some(e) => e,
        None => connectivity_scale(&space, &all) * (1.0 + 1e-9),
    };
    let opts = AntennaOptions {
        tips: cfg.tips,
        branches: cfg.branches,
        restrict_to_center_component: true,
    };
    let mut balls = Vec::new();
    for (x, r) in sample_antenna_balls(&space, cfg.samples, cfg.seed, cfg.r_min_frac, cfg.r_max_frac)? {
        let ball = space.ball(x, r)?;
        let witness = antenna_constant_with(&ball, &space, eps, &opts)?;
        balls.push(AntennaBall { x, r, witness });
    }
    let min_c = balls.iter().map(|b| b.witness.c).fold(f64::INFINITY, f64::min);
    let frac = balls.iter().filter(|b| b.witness.c >= 0.1).count() as f64 / balls.len().max(1) as f64;
    let result = json!({
        "graph_scale": eps,
        "balls": balls,
        "min_c": if balls.is_empty() { Value::Null } else { json!(min_c) },
        "fraction_at_least_0.1": frac,
    });
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_json_doc(cfg.out.as_deref(), prov, result)
}

// ---------------------------------------------------------------- martingale

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MartingaleArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long)]
    n0: Option<i32>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    k: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Only read in paper_constants mode.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    start: Option<usize>,
    /// desk or paper_constants.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct MartingaleConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    /// Unset means 4 on the desk and the derived value in paper mode.
    #[serde(rename = "M")]
    m: Option<f64>,
    n0: i32,
    c: f64,
    #[serde(rename = "K")]
    k: f64,
    beta: f64,
    eps: f64,
    start: usize,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        MartingaleConfig {
            input: None,
            m: None,
            n0: 3,
            c: 0.1,
            k: 1.0,
            beta: 0.05,
            eps: EPS_MAX / 2.0,
            start: 0,
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn martingale(ctx: &Ctx, cfg: MartingaleConfig) -> Result<()> {
    let m = match cfg.mode {
        Mode::Desk => cfg.m.unwrap_or(4.0),
        Mode::PaperConstants => {
            let p = PaperConstants::derive(cfg.beta, cfg.eps, cfg.k, cfg.c)?;
            match cfg.m {
                Some(m) if (m - p.m).abs() > 1e-9 * p.m => {
                    return Err(param("M", format!("paper_constants mode derives M = {}, got {m}", p.m)))
                }
                _ => p.m,
            }
        }
    };
    let (space, hash) = load_space(required(&cfg.input, "in")?)?;
    let top = CubeTree::covering_level(space.diameter(), m, cfg.c);
    let h = hierarchy(&space, m, top.min(cfg.n0), cfg.n0, cfg.start)?;
    let cubes = CubeTree::build(&space, &h, cfg.c)?;
    let t = TreeGraph::build(&space, &h, cfg.n0)?;
    let trace = TreeTrace::new(&space, &t, &cubes)?;
    let marks = mark_bad_cubes(&trace, &cubes, cfg.k, cfg.beta)?;
    let weights = martingale_weights(&trace, &cubes, &marks)?;
    let prov = provenance(ctx.command, &cfg, &inputs(&[("in", &hash)]))?;
    write_json_doc(cfg.out.as_deref(), prov, json!({ "M": m, "marks": marks, "weights": weights }))
}

// ---------------------------------------------------------------- report

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReportArgs {
    /// β profile CSV from `beta`.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// β-sum CSV from `tst`.
    #[arg(long)]
    sums: Option<PathBuf>,
    /// Box-counting JSON from `dim`.
    #[arg(long)]
    dim: Option<PathBuf>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct ReportConfig {
    profile: Option<PathBuf>,
    sums: Option<PathBuf>,
    dim: Option<PathBuf>,
    title: String,
    mode: Mode,
    out: Option<PathBuf>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            profile: None,
            sums: None,
            dim: None,
            title: "wiggly report".into(),
            mode: Mode::Desk,
            out: None,
        }
    }
}

fn report(ctx: &Ctx, cfg: ReportConfig) -> Result<()> {
    let mut data = ReportData {
        title: cfg.title.clone(),
        ..ReportData::default()
    };
    let mut ins = BTreeMap::new();
    if let Some(p) = &cfg.profile {
        let text = read_text(p)?;
        ins.insert("profile".to_string(), sha256_hex(text.as_bytes()));
        data.scatter = svg::read_profile(&text)?;
        data.has_profile = true;
    }
    if let Some(p) = &cfg.sums {
        let text = read_text(p)?;
        ins.insert("sums".to_string(), sha256_hex(text.as_bytes()));
        data.bars = svg::read_sums(&text)?;
        data.has_sums = true;
    }
    if let Some(p) = &cfg.dim {
        let text = read_text(p)?;
        ins.insert("dim".to_string(), sha256_hex(text.as_bytes()));
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Schema {
            field: p.display().to_string(),
            reason: format!("not valid JSON: {e}"),
        })?;
        data.boxcount = Some(svg::read_dimension(&v)?);
    }
    let prov = provenance(ctx.command, &cfg, &ins)?;
    write_out(cfg.out.as_deref(), &svg::render(&data, &prov))
}
