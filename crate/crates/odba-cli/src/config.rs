//! Run configurations: JSON file and command-line overrides merged into one
//! validated [`RunConfig`].

use std::collections::BTreeMap;
use std::path::Path;

use odba::bae::{max_m, Branch, MPolicy, Strategy};
use odba::lattice::MAX_SITES;
use odba::tensor::cr;
use odba::{ModelParams, C64};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::ConfigError;

pub const DEFAULT_IDENTITY_TOL: f64 = 1e-10;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-11;
pub const DEFAULT_MATCH_TOL: f64 = 1e-6;
pub const DEFAULT_PROPERTY_TOL: f64 = 1e-8;
pub const DEFAULT_COEFFICIENT_TOL: f64 = 1e-7;
pub const DEFAULT_SEED_COUNT: usize = 200;

const KEYS: [&str; 14] = [
    "command",
    "N",
    "p",
    "q",
    "xi",
    "theta",
    "branch",
    "M",
    "strategy",
    "tolerances",
    "seed_count",
    "rng_seed",
    "output_path",
    "format",
];

const TOLERANCE_KEYS: [&str; 5] = ["identity", "solver", "match", "property", "coefficient"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Spectrum,
    SolveBae,
    SolveFunctional,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::SolveBae => "solve-bae",
            Command::SolveFunctional => "solve-functional",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Command::Verify, Command::Spectrum, Command::SolveBae, Command::SolveFunctional]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchChoice {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "both")]
    Both,
}

impl BranchChoice {
    pub fn branches(self) -> Vec<Branch> {
        match self {
            BranchChoice::Plus => vec![Branch::Plus],
            BranchChoice::Minus => vec![Branch::Minus],
            BranchChoice::Both => Branch::BOTH.to_vec(),
        }
    }
}

/// Sector choice. `Default` is M = ⌈N/2⌉; `Sweep` runs 0..=⌊N/2⌋.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MChoice {
    Default,
    Sweep,
    Fixed(usize),
}

impl MChoice {
    pub fn policy(self) -> MPolicy {
        match self {
            MChoice::Default => MPolicy::Default,
            MChoice::Sweep => MPolicy::Sweep,
            MChoice::Fixed(m) => MPolicy::Fixed(m),
        }
    }
}

impl Serialize for MChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MChoice::Default => s.serialize_str("default"),
            MChoice::Sweep => s.serialize_str("sweep"),
            MChoice::Fixed(m) => s.serialize_u64(*m as u64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// `None` is the homogeneous chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Theta(pub Option<Vec<f64>>);

impl Serialize for Theta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            None => s.serialize_str("homogeneous"),
            Some(v) => v.serialize(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances(pub BTreeMap<String, f64>);

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }
}

impl Serialize for Tolerances {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// Fully defaulted run configuration. Serializes to the canonical form
/// embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub xi: f64,
    pub theta: Theta,
    pub branch: BranchChoice,
    #[serde(rename = "M")]
    pub m: MChoice,
    pub strategy: Strategy,
    pub tolerances: Tolerances,
    pub seed_count: usize,
    pub rng_seed: u64,
    pub output_path: Option<String>,
    pub format: Format,
}

impl RunConfig {
    pub fn params(&self) -> ModelParams {
        let theta = match &self.theta.0 {
            Some(t) => t.iter().map(|&x| cr(x)).collect(),
            None => vec![C64::new(0.0, 0.0); self.n],
        };
        ModelParams { n: self.n, p: cr(self.p), q: cr(self.q), xi: cr(self.xi), theta }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Reads the optional JSON file, applies `overrides` on top and validates.
pub fn parse_config(path: Option<&Path>, overrides: Map<String, Value>) -> Result<RunConfig, ConfigError> {
    let mut raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Io { path: p.display().to_string(), message: e.to_string() })?;
            match serde_json::from_str::<Value>(&text).map_err(|e| ConfigError::Json(e.to_string()))? {
                Value::Object(m) => m,
                _ => return Err(ConfigError::Json("top level must be an object".into())),
            }
        }
        None => Map::new(),
    };
    raw.extend(overrides);
    from_map(&raw)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    match serde_json::from_str::<Value>(text).map_err(|e| ConfigError::Json(e.to_string()))? {
        Value::Object(m) => from_map(&m),
        _ => Err(ConfigError::Json("top level must be an object".into())),
    }
}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: name.to_string(), message: message.into() }
}

fn finite(name: &str, v: &Value) -> Result<f64, ConfigError> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(field(name, format!("expected a finite number, got {v}"))),
    }
}

fn required<'a>(m: &'a Map<String, Value>, name: &str) -> Result<&'a Value, ConfigError> {
    m.get(name).filter(|v| !v.is_null()).ok_or_else(|| field(name, "missing"))
}

fn uint(name: &str, v: &Value) -> Result<u64, ConfigError> {
    v.as_u64().ok_or_else(|| field(name, format!("expected a non-negative integer, got {v}")))
}

fn from_map(m: &Map<String, Value>) -> Result<RunConfig, ConfigError> {
    if let Some(k) = m.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(field(k, "unknown key"));
    }
    let cmd = required(m, "command")?;
    let command = cmd
        .as_str()
        .and_then(Command::parse)
        .ok_or_else(|| field("command", format!("expected verify, spectrum, solve-bae or solve-functional, got {cmd}")))?;

    let n = uint("N", required(m, "N")?)? as usize;
    if n == 0 || n > MAX_SITES {
        return Err(field("N", format!("must be in 1..={MAX_SITES}, got {n}")));
    }
    let p = finite("p", required(m, "p")?)?;
    let q = finite("q", required(m, "q")?)?;
    for (name, v) in [("p", p), ("q", q)] {
        if v == 0.0 {
            return Err(field(name, "boundary parameter must be nonzero"));
        }
    }
    let xi = finite("xi", required(m, "xi")?)?;

    let theta = match m.get("theta") {
        None | Some(Value::Null) => Theta(None),
        Some(Value::String(s)) if s == "homogeneous" => Theta(None),
        Some(Value::Array(a)) => {
            let t: Vec<f64> = a.iter().map(|v| finite("theta", v)).collect::<Result<_, _>>()?;
            if t.len() != n {
                return Err(field("theta", format!("has {} entries but N = {n}", t.len())));
            }
            Theta(Some(t))
        }
        Some(v) => return Err(field("theta", format!("expected a list of numbers or \"homogeneous\", got {v}"))),
    };

    let branch = match m.get("branch") {
        None | Some(Value::Null) => BranchChoice::Both,
        Some(v) => match v.as_str() {
            Some("+") => BranchChoice::Plus,
            Some("-") => BranchChoice::Minus,
            Some("both") => BranchChoice::Both,
            _ => return Err(field("branch", format!("expected \"+\", \"-\" or \"both\", got {v}"))),
        },
    };

    let mc = match m.get("M") {
        None | Some(Value::Null) => MChoice::Default,
        Some(Value::String(s)) if s == "default" => MChoice::Default,
        Some(Value::String(s)) if s == "sweep" => MChoice::Sweep,
        Some(v) => {
            let k = v
                .as_u64()
                .ok_or_else(|| field("M", format!("expected an integer, \"default\" or \"sweep\", got {v}")))?
                as usize;
            if k > max_m(n) {
                return Err(field("M", format!("must be at most {} for N = {n}", max_m(n))));
            }
            MChoice::Fixed(k)
        }
    };

    let strategy = match m.get("strategy") {
        None | Some(Value::Null) => Strategy::Multistart,
        Some(v) => match v.as_str() {
            Some("multistart") => Strategy::Multistart,
            Some("homotopy_xi") => Strategy::HomotopyXi,
            _ => return Err(field("strategy", format!("expected \"multistart\" or \"homotopy_xi\", got {v}"))),
        },
    };

    let mut tol: BTreeMap<String, f64> = [
        ("identity", DEFAULT_IDENTITY_TOL),
        ("solver", DEFAULT_SOLVER_TOL),
        ("match", DEFAULT_MATCH_TOL),
        ("property", DEFAULT_PROPERTY_TOL),
        ("coefficient", DEFAULT_COEFFICIENT_TOL),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    match m.get("tolerances") {
        None | Some(Value::Null) => {}
        Some(Value::Object(t)) => {
            for (k, v) in t {
                let name = format!("tolerances.{k}");
                if !TOLERANCE_KEYS.contains(&k.as_str()) {
                    return Err(field(&name, "unknown tolerance"));
                }
                let x = finite(&name, v)?;
                if x <= 0.0 {
                    return Err(field(&name, "must be positive"));
                }
                tol.insert(k.clone(), x);
            }
        }
        Some(v) => return Err(field("tolerances", format!("expected an object, got {v}"))),
    }

    let seed_count = match m.get("seed_count") {
        None | Some(Value::Null) => DEFAULT_SEED_COUNT,
        Some(v) => match uint("seed_count", v)? {
            0 => return Err(field("seed_count", "must be at least 1")),
            k => k as usize,
        },
    };
    let rng_seed = match m.get("rng_seed") {
        None | Some(Value::Null) => 0,
        Some(v) => uint("rng_seed", v)?,
    };
    let output_path = match m.get("output_path") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(v) => return Err(field("output_path", format!("expected a string, got {v}"))),
    };
    let format = match m.get("format") {
        None | Some(Value::Null) => Format::Json,
        Some(v) => match v.as_str() {
            Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            _ => return Err(field("format", format!("expected \"json\" or \"csv\", got {v}"))),
        },
    };

    let config = RunConfig {
        command,
        n,
        p,
        q,
        xi,
        theta,
        branch,
        m: mc,
        strategy,
        tolerances: Tolerances(tol),
        seed_count,
        rng_seed,
        output_path,
        format,
    };
    let params = config.params();
    params.validate().map_err(|e| ConfigError::Params(e.to_string()))?;
    if config.theta.0.is_some() {
        params.check_functional_poles().map_err(|e| field("theta", format!("{e} (pole rule 1 ± 2θ_j ≠ 0)")))?;
    }
    Ok(config)
}
