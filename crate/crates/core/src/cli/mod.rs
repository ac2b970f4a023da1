//! Command-line surface: argument parsing, config resolution, provenance
//! and output writing. The subcommands themselves live in [`commands`].
//!
//! Every setting can come from a flag, from the `--config` JSON document
//! (keys are the flag names without dashes in front), or from the built-in
//! default, in that order of precedence.

mod commands;
pub mod svg;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use commands::{sample_antenna_balls, AntennaBall};

/// Keys that name files rather than settings. They are echoed in the
/// provenance but kept out of the config hash, which instead covers the
/// content hashes of the inputs.
const PATH_KEYS: [&str; 7] = ["in", "out", "balls", "profile", "sums", "dim", "config"];

#[derive(Parser, Debug)]
#[command(name = "wiggly", version, about = "Multiscale flatness analysis of finite metric spaces")]
pub struct Cli {
    /// JSON document whose keys mirror the flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "WIGGLY_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a sample point set.
    Gen(commands::GenArgs),
    /// Build nested nets and check their properties.
    Nets(commands::NetsArgs),
    /// Build Schul cores and check their properties.
    Cubes(commands::CubesArgs),
    /// Multiscale β profile as CSV.
    Beta(commands::BetaArgs),
    /// Spanning tree, Euler tour, length checks and excess.
    Tree(commands::TreeArgs),
    /// Per-level β sums as CSV.
    Tst(commands::TstArgs),
    /// Box-counting or Frostmann dimension estimate.
    Dim(commands::DimArgs),
    /// Certified antenna constants on sampled balls.
    Antenna(commands::AntennaArgs),
    /// Bad cubes, martingale weights and the packing check.
    Martingale(commands::MartingaleArgs),
    /// SVG summary of profile, β-sum and dimension outputs.
    Report(commands::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Nets(_) => "nets",
            Command::Cubes(_) => "cubes",
            Command::Beta(_) => "beta",
            Command::Tree(_) => "tree",
            Command::Tst(_) => "tst",
            Command::Dim(_) => "dim",
            Command::Antenna(_) => "antenna",
            Command::Martingale(_) => "martingale",
            Command::Report(_) => "report",
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a validation failure (reported as
/// JSON on stderr), 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Some(read_json(p)?),
        None => None,
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Param {
            name: "threads",
            reason: e.to_string(),
        })?;
    let ctx = Ctx {
        command: cli.command.name(),
        config,
    };
    pool.install(|| commands::dispatch(&cli.command, &ctx))
}

/// Machine-readable description of an error.
pub fn error_json(e: &Error) -> String {
    let (kind, field) = match e {
        Error::InvalidMetric(_) => ("invalid_metric", None),
        Error::Triangle { .. } => ("triangle", None),
        Error::Index { .. } => ("index", None),
        Error::Param { name, .. } => ("param", Some(name.to_string())),
        Error::Degenerate(_) => ("degenerate", None),
        Error::Disconnected { .. } => ("disconnected", None),
        Error::Sampling(_) => ("sampling", None),
        Error::Schema { field, .. } => ("schema", Some(field.clone())),
        Error::Io(_) => ("io", None),
        Error::Json(_) => ("json", None),
    };
    json!({ "error": { "kind": kind, "field": field, "message": e.to_string() } }).to_string()
}

/// Per-run state shared by the commands.
pub(crate) struct Ctx {
    pub command: &'static str,
    pub config: Option<Value>,
}

impl Ctx {
    /// Merges defaults, the config document and the flags (non-null values
    /// only) and deserializes the result. Field errors name the key.
    pub fn resolve<C: DeserializeOwned + Serialize>(&self, flags: &impl Serialize) -> Result<C> {
        let mut merged = match &self.config {
            None => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => {
                return Err(Error::Schema {
                    field: "config".into(),
                    reason: "the config document must be a JSON object".into(),
                })
            }
        };
        if let Value::Object(f) = serde_json::to_value(flags)? {
            for (k, v) in f {
                if !v.is_null() {
                    merged.insert(k, v);
                }
            }
        }
        let keys: Vec<String> = merged.keys().cloned().collect();
        let resolved: C = from_value_at(Value::Object(merged))?;
        if let Value::Object(known) = serde_json::to_value(&resolved)? {
            if let Some(k) = keys.iter().find(|k| !known.contains_key(*k)) {
                return Err(Error::Schema {
                    field: k.clone(),
                    reason: format!("unknown setting for `{}`", self.command),
                });
            }
        }
        Ok(resolved)
    }
}

/// Deserializes `v`, reporting the path of a failing field.
pub(crate) fn from_value_at<C: DeserializeOwned>(v: Value) -> Result<C> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema {
            field: if path == "." { String::new() } else { path },
            reason: e.into_inner().to_string(),
        }
    })
}

pub(crate) fn read_json(path: &Path) -> Result<Value> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        field: path.display().to_string(),
        reason: format!("not valid JSON: {e}"),
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The provenance block written into every output.
pub(crate) fn provenance(command: &str, resolved: &impl Serialize, inputs: &BTreeMap<String, String>) -> Result<Value> {
    let config = serde_json::to_value(resolved)?;
    let mut hashed = config.clone();
    if let Value::Object(m) = &mut hashed {
        for k in PATH_KEYS {
            m.remove(k);
        }
    }
    let digest = sha256_hex(json!({ "command": command, "config": hashed, "inputs": inputs }).to_string().as_bytes());
    Ok(json!({
        "tool": "wiggly",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "config_hash": digest,
        "inputs": inputs,
    }))
}

/// Pretty JSON with a trailing newline. Object keys come out sorted, so
/// reading a file back as a value and writing it again reproduces it.
pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

pub(crate) fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Sidecar path holding the provenance of a CSV output.
pub fn provenance_sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}
