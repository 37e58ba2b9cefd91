//! Run configuration: command-line flags over an optional `key = value`
//! file. Flags win.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hodgecurl_core::spectral::{Formulation, TraceClass};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Info,
    Homology,
    Hodge,
    Basis,
    Spectrum,
    Curlcurl,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Info => "info",
            Command::Homology => "homology",
            Command::Hodge => "hodge",
            Command::Basis => "basis",
            Command::Spectrum => "spectrum",
            Command::Curlcurl => "curlcurl",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Cube { n: usize, side: f64 },
    Ball { radius: f64, refine: usize },
    SolidTorus { big_r: f64, r: f64, nu: usize, nv: usize, nw: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Generated(Generator),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub mesh: MeshSource,
    pub trace: TraceClass,
    /// 1-based handle indices in `I`; checked against the genus once the
    /// mesh is known.
    pub partition_i: Vec<usize>,
    pub k: usize,
    pub zero_tol: f64,
    pub dense_threshold: usize,
    pub shift: Option<f64>,
    pub seed: u64,
    pub formulation: Formulation,
    pub drop_symplectic_row: bool,
    /// `curlcurl` only: run the refinement demo on `refine-2..=refine`.
    pub demo: bool,
    pub out: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
}

/// Keys accepted in config files; flag names without the leading dashes.
pub const KEYS: &[&str] = &[
    "mesh",
    "gen",
    "radius",
    "refine",
    "n",
    "side",
    "R",
    "r",
    "nu",
    "nv",
    "nw",
    "trace",
    "partition-I",
    "k",
    "zero-tol",
    "dense-threshold",
    "shift",
    "seed",
    "formulation",
    "drop-symplectic-row",
    "demo",
    "out",
    "sidecar",
];

#[derive(Parser, Debug)]
#[command(name = "hodgecurl", version, about = "Self-adjoint curl operators on tetrahedral meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Mesh counts, Euler characteristics and orientation checks.
    Info(Flags),
    /// Betti numbers, canonical cycles and intersection matrix.
    Homology(Flags),
    /// Harmonic space and Hodge splitting of sample cochains.
    Hodge(Flags),
    /// Symplectic harmonic basis, periods, Gram matrix and Lagrangians.
    Basis(Flags),
    /// Restricted curl operator and its spectrum.
    Spectrum(Flags),
    /// Curl-curl spectra and the squared-spectrum comparison.
    Curlcurl(Flags),
    /// Runs every invariant check; exits 6 if any fails.
    Verify(Flags),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Gmsh MSH 2.2 ASCII file.
    #[arg(long)]
    pub mesh: Option<String>,
    /// Built-in mesh: cube, ball or solid-torus.
    #[arg(long)]
    pub gen: Option<String>,
    #[arg(long)]
    pub radius: Option<String>,
    #[arg(long)]
    pub refine: Option<String>,
    /// Cube cells per side.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub side: Option<String>,
    /// Solid torus major radius.
    #[arg(long = "R")]
    pub big_r: Option<String>,
    /// Solid torus minor radius.
    #[arg(long = "r")]
    pub r: Option<String>,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub nv: Option<String>,
    #[arg(long)]
    pub nw: Option<String>,
    /// closed or coclosed.
    #[arg(long)]
    pub trace: Option<String>,
    /// Comma-separated handle indices in I; the rest form I'.
    #[arg(long = "partition-I", allow_hyphen_values = true)]
    pub partition_i: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long = "zero-tol")]
    pub zero_tol: Option<String>,
    #[arg(long = "dense-threshold")]
    pub dense_threshold: Option<String>,
    /// Shift for the iterative Galerkin solver.
    #[arg(long)]
    pub shift: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// galerkin or inverse.
    #[arg(long)]
    pub formulation: Option<String>,
    /// Negative control: drop one symplectic constraint row.
    #[arg(long = "drop-symplectic-row")]
    pub drop_symplectic_row: bool,
    /// curlcurl: refinement demo on three ball levels.
    #[arg(long)]
    pub demo: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
    /// Directory for binary dumps of matrices too large to inline.
    #[arg(long)]
    pub sidecar: Option<String>,
    /// key = value file; flags override it.
    #[arg(long)]
    pub config: Option<String>,
}

impl Sub {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            Sub::Info(f) => (Command::Info, f),
            Sub::Homology(f) => (Command::Homology, f),
            Sub::Hodge(f) => (Command::Hodge, f),
            Sub::Basis(f) => (Command::Basis, f),
            Sub::Spectrum(f) => (Command::Spectrum, f),
            Sub::Curlcurl(f) => (Command::Curlcurl, f),
            Sub::Verify(f) => (Command::Verify, f),
        }
    }
}

impl Flags {
    fn entries(&self) -> Vec<(&'static str, String)> {
        let opts = [
            ("mesh", &self.mesh),
            ("gen", &self.gen),
            ("radius", &self.radius),
            ("refine", &self.refine),
            ("n", &self.n),
            ("side", &self.side),
            ("R", &self.big_r),
            ("r", &self.r),
            ("nu", &self.nu),
            ("nv", &self.nv),
            ("nw", &self.nw),
            ("trace", &self.trace),
            ("partition-I", &self.partition_i),
            ("k", &self.k),
            ("zero-tol", &self.zero_tol),
            ("dense-threshold", &self.dense_threshold),
            ("shift", &self.shift),
            ("seed", &self.seed),
            ("formulation", &self.formulation),
            ("out", &self.out),
            ("sidecar", &self.sidecar),
        ];
        let mut v: Vec<(&'static str, String)> = opts.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect();
        if self.drop_symplectic_row {
            v.push(("drop-symplectic-row", "true".into()));
        }
        if self.demo {
            v.push(("demo", "true".into()));
        }
        v
    }
}

/// Parses a `key = value` file. `#` starts a comment; values may be
/// double-quoted; `_` in keys is read as `-`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        let mut val = v.trim();
        if val.len() >= 2 && val.starts_with('"') && val.ends_with('"') {
            val = &val[1..val.len() - 1];
        }
        if map.insert(key.clone(), val.to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(map)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.trim().parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {s:?}"))),
        }
    }

    fn positive_f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x: f64 = self.parse(key, default)?;
        if !(x.is_finite() && x > 0.0) {
            return Err(CliError::Config(format!("{key} must be a positive number, got {x}")));
        }
        Ok(x)
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key).map(|s| s.trim()) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") | Some("") => Ok(true),
            Some(s) => Err(CliError::Config(format!("{key}: expected true or false, got {s:?}"))),
        }
    }
}

/// Combines the config file (if any) with the flags and validates the
/// result. Partition indices are only checked for syntax here.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut map = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config file {path}: {e}")))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in flags.entries() {
        map.insert(k.to_string(), v);
    }
    from_map(command, map)
}

pub fn from_map(command: Command, map: BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let v = Values(map);
    let mesh = match (v.get("mesh"), v.get("gen")) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either mesh or gen, not both".into())),
        (None, None) => return Err(CliError::Config("no mesh source: pass --mesh FILE or --gen NAME".into())),
        (Some(p), None) => MeshSource::File(PathBuf::from(p)),
        (None, Some(name)) => MeshSource::Generated(generator(name, &v)?),
    };
    let trace = match v.get("trace").unwrap_or("closed") {
        "closed" => TraceClass::Closed,
        "coclosed" | "co-closed" => TraceClass::Coclosed,
        other => return Err(CliError::Config(format!("trace must be closed or coclosed, got {other:?}"))),
    };
    let partition_i = match v.get("partition-I") {
        None => Vec::new(),
        Some(s) => parse_index_list(s)?,
    };
    let k: usize = v.parse("k", 6)?;
    if k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    let zero_tol = v.positive_f64("zero-tol", 1e-6)?;
    let shift = match v.get("shift") {
        None => None,
        Some(_) => {
            let s: f64 = v.parse("shift", 0.0)?;
            if !s.is_finite() || s == 0.0 {
                return Err(CliError::Config("shift must be finite and nonzero".into()));
            }
            Some(s)
        }
    };
    let formulation = match v.get("formulation").unwrap_or("galerkin") {
        "galerkin" => Formulation::Galerkin,
        "inverse" => Formulation::Inverse,
        other => return Err(CliError::Config(format!("formulation must be galerkin or inverse, got {other:?}"))),
    };
    let demo = v.flag("demo")?;
    if demo && command != Command::Curlcurl {
        return Err(CliError::Config("demo applies to the curlcurl command only".into()));
    }
    Ok(RunConfig {
        command,
        mesh,
        trace,
        partition_i,
        k,
        zero_tol,
        dense_threshold: v.parse("dense-threshold", 5000)?,
        shift,
        seed: v.parse("seed", 0)?,
        formulation,
        drop_symplectic_row: v.flag("drop-symplectic-row")?,
        demo,
        out: v.get("out").map(PathBuf::from),
        sidecar: v.get("sidecar").map(PathBuf::from),
    })
}

fn generator(name: &str, v: &Values) -> Result<Generator, CliError> {
    let unused = |keys: &[&str]| -> Result<(), CliError> {
        for k in ["radius", "refine", "n", "side", "R", "r", "nu", "nv", "nw"] {
            if !keys.contains(&k) && v.get(k).is_some() {
                return Err(CliError::Config(format!("{k} does not apply to the {name} generator")));
            }
        }
        Ok(())
    };
    match name {
        "cube" => {
            unused(&["n", "side"])?;
            let n: usize = v.parse("n", 2)?;
            if n == 0 {
                return Err(CliError::Config("cube needs n >= 1".into()));
            }
            Ok(Generator::Cube { n, side: v.positive_f64("side", 1.0)? })
        }
        "ball" => {
            unused(&["radius", "refine"])?;
            let refine: usize = v.parse("refine", 1)?;
            if refine > 6 {
                return Err(CliError::Config(format!("refine {refine} is too large (at most 6)")));
            }
            Ok(Generator::Ball { radius: v.positive_f64("radius", 1.0)?, refine })
        }
        "solid-torus" | "torus" => {
            unused(&["R", "r", "nu", "nv", "nw"])?;
            let big_r = v.positive_f64("R", 2.0)?;
            let r = v.positive_f64("r", 1.0)?;
            if r >= big_r {
                return Err(CliError::Config(format!("solid torus needs r < R, got r = {r}, R = {big_r}")));
            }
            let nu: usize = v.parse("nu", 8)?;
            let nv: usize = v.parse("nv", 8)?;
            let nw: usize = v.parse("nw", 2)?;
            if nu < 3 || nv < 4 || nv % 4 != 0 || nw < 1 {
                return Err(CliError::Config(format!(
                    "solid torus needs nu >= 3, nv a positive multiple of 4 and nw >= 1; got nu = {nu}, nv = {nv}, nw = {nw}"
                )));
            }
            Ok(Generator::SolidTorus { big_r, r, nu, nv, nw })
        }
        other => Err(CliError::Config(format!("unknown generator {other:?}; expected cube, ball or solid-torus"))),
    }
}

/// `"1,3"`, `"[1, 3]"`, `""` or `"none"`.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']').trim();
    if s.is_empty() || s == "none" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .map_err(|_| CliError::Partition(format!("index {t:?} is not a positive integer")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn config_file_syntax() {
        let m = parse_config_file("# run\ngen = \"ball\"\nrefine=2 # inline\npartition_I = 1,2\n\n").unwrap();
        assert_eq!(m["gen"], "ball");
        assert_eq!(m["refine"], "2");
        assert_eq!(m["partition-I"], "1,2");
        assert!(parse_config_file("bogus = 1").is_err());
        assert!(parse_config_file("k = 1\nk = 2").is_err());
        assert!(parse_config_file("just words").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("hodgecurl-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "gen = ball\nk = 3\ntrace = coclosed\n").unwrap();
        let flags = Flags { config: Some(path.display().to_string()), k: Some("5".into()), ..Default::default() };
        let cfg = resolve(Command::Spectrum, &flags).unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.trace, TraceClass::Coclosed);
        assert_eq!(cfg.mesh, MeshSource::Generated(Generator::Ball { radius: 1.0, refine: 1 }));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn validation() {
        let bad = [
            map(&[]),
            map(&[("gen", "ball"), ("mesh", "x.msh")]),
            map(&[("gen", "ball"), ("k", "0")]),
            map(&[("gen", "ball"), ("nu", "8")]),
            map(&[("gen", "solid-torus"), ("nv", "6")]),
            map(&[("gen", "solid-torus"), ("r", "3")]),
            map(&[("gen", "ball"), ("trace", "open")]),
            map(&[("gen", "ball"), ("zero-tol", "-1")]),
            map(&[("gen", "ball"), ("demo", "true")]),
            map(&[("gen", "sphere")]),
        ];
        for m in bad {
            let e = from_map(Command::Spectrum, m.clone()).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{m:?}");
        }
        assert!(matches!(
            from_map(Command::Spectrum, map(&[("gen", "ball"), ("partition-I", "1,x")])),
            Err(CliError::Partition(_))
        ));
    }

    #[test]
    fn index_lists() {
        assert_eq!(parse_index_list("").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_index_list("none").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_index_list("[2, 1]").unwrap(), vec![2, 1]);
        assert!(parse_index_list("-1").is_err());
    }
}
