//! Line-oriented scenario configuration.
//!
//! ```text
//! # comment
//! [disc_spectrum]
//! B0 = 1
//! r0 = 1
//! lambda_max = 30
//! ```
//!
//! One `[scenario]` header, then `key = value` lines. Lists are comma
//! separated. Keys are case sensitive; unknown keys are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("key `{key}`: {msg}")]
    Validation { key: String, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, msg: msg.into() }
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scenario {
    DiscSpectrum,
    Bounds2D,
    CompareKW13,
    Cusp3D,
    Perturbed2D,
    Perturbed3D,
    Constants,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::DiscSpectrum,
        Scenario::Bounds2D,
        Scenario::CompareKW13,
        Scenario::Cusp3D,
        Scenario::Perturbed2D,
        Scenario::Perturbed3D,
        Scenario::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::DiscSpectrum => "disc_spectrum",
            Scenario::Bounds2D => "bounds2d",
            Scenario::CompareKW13 => "compare_kw13",
            Scenario::Cusp3D => "cusp3d",
            Scenario::Perturbed2D => "perturbed2d",
            Scenario::Perturbed3D => "perturbed3d",
            Scenario::Constants => "constants",
        }
    }

    /// Accepts `disc_spectrum` and `disc-spectrum`.
    pub fn from_name(name: &str) -> Option<Self> {
        let norm = name.trim().replace('-', "_");
        Self::ALL.into_iter().find(|s| s.name() == norm)
    }

    fn keys(self) -> &'static [KeySpec] {
        match self {
            Scenario::DiscSpectrum => DISC_KEYS,
            Scenario::Bounds2D => BOUNDS_KEYS,
            Scenario::CompareKW13 => KW13_KEYS,
            Scenario::Cusp3D => CUSP_KEYS,
            Scenario::Perturbed2D => PERTURBED2D_KEYS,
            Scenario::Perturbed3D => PERTURBED3D_KEYS,
            Scenario::Constants => CONSTANTS_KEYS,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(usize),
    List(Vec<f64>),
    Text(String),
    Flag(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => f.write_str(&crate::output::fmt_f64(*x)),
            Value::Int(n) => write!(f, "{n}"),
            Value::List(xs) => {
                let parts: Vec<String> = xs.iter().map(|&x| crate::output::fmt_f64(x)).collect();
                f.write_str(&parts.join(", "))
            }
            Value::Text(s) => f.write_str(s),
            Value::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// Closed or open lower bound, closed upper bound.
    Float {
        min: f64,
        open: bool,
        max: f64,
    },
    Int {
        min: usize,
        max: usize,
    },
    List {
        min: f64,
        open: bool,
    },
    Choice(&'static [&'static str]),
    Flag,
}

#[derive(Debug, Clone, Copy)]
enum Default {
    Required,
    Optional,
    Fixed(&'static str),
    /// Computed from the other parameters.
    Derived(fn(&BTreeMap<String, Value>) -> Value),
}

#[derive(Debug, Clone, Copy)]
struct KeySpec {
    name: &'static str,
    kind: Kind,
    default: Default,
}

const fn key(name: &'static str, kind: Kind, default: Default) -> KeySpec {
    KeySpec { name, kind, default }
}

const POS: Kind = Kind::Float { min: 0.0, open: true, max: f64::INFINITY };
const NONNEG: Kind = Kind::Float { min: 0.0, open: false, max: f64::INFINITY };
const REAL: Kind = Kind::Float { min: f64::NEG_INFINITY, open: false, max: f64::INFINITY };
const UNIT: Kind = Kind::Float { min: 0.0, open: true, max: 1.0 };
const GRID: Kind = Kind::Int { min: 64, max: 1 << 22 };
const SHAPES: Kind = Kind::Choice(&["power", "gauss", "hole"]);

/// Keys accepted in every scenario.
const COMMON_KEYS: &[KeySpec] = &[
    key("tolerance", UNIT, Default::Fixed("1e-9")),
    key("formats", Kind::Choice(&[]), Default::Optional),
    key("output_dir", Kind::Choice(&[]), Default::Optional),
];

fn float(p: &BTreeMap<String, Value>, k: &str) -> f64 {
    match p.get(k) {
        Some(Value::Float(x)) => *x,
        _ => f64::NAN,
    }
}

const DISC_KEYS: &[KeySpec] = &[
    key("B0", POS, Default::Required),
    key("r0", POS, Default::Required),
    key("lambda_max", POS, Default::Required),
    key("grid_points", GRID, Default::Fixed("4096")),
    key("cross_check", Kind::Flag, Default::Fixed("true")),
    key("cross_check_tol", UNIT, Default::Fixed("1e-5")),
];

const BOUNDS_KEYS: &[KeySpec] = &[
    key("B0", POS, Default::Required),
    key("r0", POS, Default::Required),
    key("lambda_max", POS, Default::Derived(|p| Value::Float(10.0 * float(p, "B0")))),
    key("lambda_points", Kind::Int { min: 1, max: 100_000 }, Default::Fixed("50")),
    key("n_max", Kind::Int { min: 1, max: 100_000 }, Default::Fixed("100")),
];

const KW13_KEYS: &[KeySpec] = &[
    key("B0", Kind::List { min: 0.0, open: true }, Default::Required),
    key("r0", POS, Default::Fixed("1")),
    key("alpha_ratio", UNIT, Default::Fixed("0.5")),
    key("sigma_omega", POS, Default::Derived(|p| Value::Float(PI * float(p, "r0")))),
];

const CUSP_KEYS: &[KeySpec] = &[
    key("B3", NONNEG, Default::Required),
    key("Lambda", Kind::List { min: 0.0, open: true }, Default::Required),
    key("r0_scale", POS, Default::Fixed("1")),
    key("x3_min", REAL, Default::Fixed("-20")),
    key("x3_max", REAL, Default::Fixed("20")),
    key("sigma", Kind::Float { min: 1.5, open: false, max: f64::INFINITY }, Default::Fixed("1.5")),
    key("section_grid", GRID, Default::Fixed("1024")),
    key("quad_tol", UNIT, Default::Fixed("1e-8")),
];

const PERTURBED2D_KEYS: &[KeySpec] = &[
    key("shape", SHAPES, Default::Required),
    key("B0", POS, Default::Required),
    key("beta", Kind::Float { min: 1.0, open: true, max: f64::INFINITY }, Default::Optional),
    key("epsilon", POS, Default::Optional),
    key("radius", POS, Default::Optional),
    key("gamma", Kind::List { min: 0.0, open: false }, Default::Fixed("1, 1.5, 2, 3")),
    key("k_max", Kind::Int { min: 0, max: 100_000 }, Default::Fixed("30")),
    key("k_budget", Kind::Int { min: 1, max: 1_000_000 }, Default::Fixed("400")),
    key("r_max", POS, Default::Optional),
];

/// Largest admissible amplitude of the x3 profile for each shape, capped
/// at 1 so that the amplitude times `sup g` stays below `B0`.
fn amplitude_cap(p: &BTreeMap<String, Value>) -> Value {
    let cap = match p.get("shape") {
        Some(Value::Text(s)) if s == "power" => 2.0 * (float(p, "beta") - 1.0),
        Some(Value::Text(s)) if s == "gauss" => 2.0 * float(p, "epsilon"),
        _ => 1.0,
    };
    Value::Float(cap.min(1.0))
}

const PERTURBED3D_KEYS: &[KeySpec] = &[
    key("shape", SHAPES, Default::Required),
    key("B0", POS, Default::Required),
    key("beta", Kind::Float { min: 1.0, open: true, max: f64::INFINITY }, Default::Optional),
    key("epsilon", POS, Default::Optional),
    key("radius", POS, Default::Optional),
    key("sigma", Kind::Float { min: 1.5, open: true, max: f64::INFINITY }, Default::Fixed("2")),
    key("amplitude", POS, Default::Derived(amplitude_cap)),
    key("half_width", POS, Default::Fixed("8")),
    key("k_budget", Kind::Int { min: 1, max: 1_000_000 }, Default::Fixed("400")),
    key("quad_tol", UNIT, Default::Fixed("1e-6")),
];

const CONSTANTS_KEYS: &[KeySpec] = &[
    key("beta", Kind::Float { min: 1.0, open: true, max: f64::INFINITY }, Default::Optional),
    key("gamma", POS, Default::Optional),
    key("epsilon", POS, Default::Optional),
    key("sigma", Kind::Float { min: 1.5, open: true, max: f64::INFINITY }, Default::Optional),
    key("B0", POS, Default::Optional),
    key("radius", POS, Default::Optional),
    key("terms", Kind::Int { min: 2, max: 1 << 24 }, Default::Fixed("4096")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub report: bool,
}

/// A validated scenario configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub parameters: BTreeMap<String, Value>,
    /// Keys whose values were filled in from defaults.
    pub defaulted: Vec<String>,
    pub output_dir: Option<PathBuf>,
    pub formats: Formats,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn float(&self, key: &str) -> Option<f64> {
        match self.parameters.get(key) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<usize> {
        match self.parameters.get(key) {
            Some(Value::Int(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        match self.parameters.get(key) {
            Some(Value::List(xs)) => Some(xs),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.parameters.get(key) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        match self.parameters.get(key) {
            Some(Value::Flag(b)) => Some(*b),
            _ => None,
        }
    }

    /// Echo of every parameter, defaults marked.
    pub fn echo(&self) -> Vec<String> {
        self.parameters
            .iter()
            .map(|(k, v)| {
                let mark = if self.defaulted.contains(k) { "  (default)" } else { "" };
                format!("{k} = {v}{mark}")
            })
            .collect()
    }
}

fn parse_float(key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.trim().parse::<f64>().map_err(|_| invalid(key, format!("expected a number, got `{}`", raw.trim())))
}

fn check_range(key: &str, x: f64, min: f64, open: bool, max: f64) -> Result<(), ConfigError> {
    let above = if open { x > min } else { x >= min };
    if !(above && x <= max && !x.is_nan()) {
        let lo = if open { "(" } else { "[" };
        return Err(invalid(key, format!("value {x} outside {lo}{min}, {max}]")));
    }
    Ok(())
}

fn parse_value(spec: &KeySpec, raw: &str) -> Result<Value, ConfigError> {
    let key = spec.name;
    match spec.kind {
        Kind::Float { min, open, max } => {
            let x = parse_float(key, raw)?;
            check_range(key, x, min, open, max)?;
            Ok(Value::Float(x))
        }
        Kind::Int { min, max } => {
            let n = raw
                .trim()
                .parse::<usize>()
                .map_err(|_| invalid(key, format!("expected an integer, got `{}`", raw.trim())))?;
            if n < min || n > max {
                return Err(invalid(key, format!("value {n} outside [{min}, {max}]")));
            }
            Ok(Value::Int(n))
        }
        Kind::List { min, open } => {
            let xs = raw
                .split(',')
                .map(|t| {
                    let x = parse_float(key, t)?;
                    check_range(key, x, min, open, f64::INFINITY)?;
                    Ok(x)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Value::List(xs))
        }
        Kind::Choice(options) => {
            let v = raw.trim();
            if options.is_empty() || options.contains(&v) {
                Ok(Value::Text(v.to_string()))
            } else {
                Err(invalid(key, format!("expected one of {}, got `{v}`", options.join(" | "))))
            }
        }
        Kind::Flag => match raw.trim() {
            "true" | "yes" | "1" => Ok(Value::Flag(true)),
            "false" | "no" | "0" => Ok(Value::Flag(false)),
            other => Err(invalid(key, format!("expected true or false, got `{other}`"))),
        },
    }
}

fn suggestion(unknown: &str, specs: &[&KeySpec]) -> Option<&'static str> {
    specs
        .iter()
        .map(|s| {
            (
                strsim::damerau_levenshtein(unknown, s.name)
                    .min(strsim::damerau_levenshtein(&unknown.to_lowercase(), &s.name.to_lowercase())),
                s.name,
            )
        })
        .filter(|&(d, name)| d <= 2.max(name.len() / 3))
        .min_by_key(|&(d, _)| d)
        .map(|(_, name)| name)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut scenario = None;
    let mut raw: Vec<(usize, String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| parse_err(n, "unterminated section header"))?;
            if scenario.is_some() {
                return Err(parse_err(n, "only one scenario section is allowed"));
            }
            let s = Scenario::from_name(name).ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                parse_err(n, format!("unknown scenario `{}`; expected one of {}", name.trim(), names.join(", ")))
            })?;
            scenario = Some(s);
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| parse_err(n, format!("expected `key = value`, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(parse_err(n, "empty key or value"));
        }
        if scenario.is_none() {
            return Err(parse_err(n, "key outside a [scenario] section"));
        }
        if raw.iter().any(|(_, seen, _)| seen == k) {
            return Err(parse_err(n, format!("duplicate key `{k}`")));
        }
        raw.push((n, k.to_string(), v.to_string()));
    }
    let scenario = scenario.ok_or_else(|| parse_err(text.lines().count().max(1), "missing [scenario] section"))?;
    validate(scenario, raw)
}

fn validate(scenario: Scenario, raw: Vec<(usize, String, String)>) -> Result<RunConfig, ConfigError> {
    let specs: Vec<&KeySpec> = scenario.keys().iter().chain(COMMON_KEYS).collect();
    let mut parameters = BTreeMap::new();
    let mut output_dir = None;
    let mut formats = Formats { csv: true, report: true };
    for (_, k, v) in &raw {
        let Some(spec) = specs.iter().find(|s| s.name == k) else {
            let hint = match suggestion(k, &specs) {
                Some(s) => format!("unknown key; did you mean `{s}`?"),
                None => "unknown key".to_string(),
            };
            return Err(invalid(k, hint));
        };
        match spec.name {
            "output_dir" => output_dir = Some(PathBuf::from(v)),
            "formats" => {
                let items: Vec<&str> = v.split(',').map(str::trim).collect();
                if items.is_empty() || items.iter().any(|f| *f != "csv" && *f != "report") {
                    return Err(invalid(k, "expected a subset of {csv, report}"));
                }
                formats = Formats { csv: items.contains(&"csv"), report: items.contains(&"report") };
            }
            _ => {
                parameters.insert(k.clone(), parse_value(spec, v)?);
            }
        }
    }
    let mut defaulted = Vec::new();
    for spec in &specs {
        if parameters.contains_key(spec.name) || matches!(spec.name, "output_dir" | "formats") {
            continue;
        }
        let value = match spec.default {
            Default::Required => return Err(invalid(spec.name, format!("required by scenario {scenario}"))),
            Default::Optional => continue,
            Default::Fixed(text) => parse_value(spec, text)?,
            Default::Derived(_) => continue,
        };
        parameters.insert(spec.name.to_string(), value);
        defaulted.push(spec.name.to_string());
    }
    let mut config = RunConfig { scenario, parameters, defaulted, output_dir, formats, warnings: Vec::new() };
    check_scenario(&mut config)?;
    for spec in &specs {
        if let Default::Derived(rule) = spec.default {
            if !config.parameters.contains_key(spec.name) {
                let value = rule(&config.parameters);
                if let Value::Float(x) = value {
                    if let Kind::Float { min, open, max } = spec.kind {
                        check_range(spec.name, x, min, open, max)?;
                    }
                }
                config.parameters.insert(spec.name.to_string(), value);
                config.defaulted.push(spec.name.to_string());
            }
        }
    }
    config.defaulted.sort();
    Ok(config)
}

/// Cross-key rules that the per-key ranges cannot express.
fn check_scenario(c: &mut RunConfig) -> Result<(), ConfigError> {
    match c.scenario {
        Scenario::DiscSpectrum => {
            let (b0, lmax) = (c.float("B0").unwrap_or(0.0), c.float("lambda_max").unwrap_or(0.0));
            if lmax <= b0 {
                c.warnings
                    .push(format!("lambda_max = {lmax} does not exceed B0 = {b0}; the spectrum below it is empty"));
            }
        }
        Scenario::Bounds2D => {
            if let (Some(b0), Some(lmax)) = (c.float("B0"), c.float("lambda_max")) {
                if lmax <= b0 {
                    return Err(invalid("lambda_max", format!("must exceed B0 = {b0}")));
                }
            }
        }
        Scenario::Cusp3D => {
            if !(c.float("x3_min") < c.float("x3_max")) {
                return Err(invalid("x3_max", "must exceed x3_min"));
            }
        }
        Scenario::Perturbed2D | Scenario::Perturbed3D => {
            let needed = match c.text("shape") {
                Some("power") => "beta",
                Some("gauss") => "epsilon",
                _ => "radius",
            };
            if !c.parameters.contains_key(needed) {
                return Err(invalid(needed, format!("required for shape {}", c.text("shape").unwrap_or(""))));
            }
            for other in ["beta", "epsilon", "radius"] {
                if other != needed && c.parameters.contains_key(other) {
                    return Err(invalid(other, format!("not used by shape {}", c.text("shape").unwrap_or(""))));
                }
            }
        }
        Scenario::Constants => {
            let has = |k: &str| c.parameters.contains_key(k);
            let k = has("beta") || has("gamma");
            let g = has("epsilon");
            let j = has("B0") || has("radius");
            if k && !(has("beta") && has("gamma")) {
                return Err(invalid(if has("beta") { "gamma" } else { "beta" }, "K needs both beta and gamma"));
            }
            if (g || j) && !has("sigma") {
                return Err(invalid("sigma", "G and J need sigma"));
            }
            if j && !(has("B0") && has("radius")) {
                return Err(invalid(if has("B0") { "radius" } else { "B0" }, "J needs both B0 and radius"));
            }
            if !(k || g || j) {
                return Err(invalid(
                    "beta",
                    "no constant requested; give beta and gamma, epsilon and sigma, or B0, radius and sigma",
                ));
            }
        }
        Scenario::CompareKW13 => {}
    }
    Ok(())
}
