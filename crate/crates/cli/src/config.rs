//! Run configuration: a TOML document with the top-level keys `command`,
//! `output_dir` and `seed`, and one table per command.
//!
//! ```toml
//! command = "sr-curve"
//!
//! [sr-curve]
//! R = 1.0
//! k = 1.0
//! ```
//!
//! Environment variables override single keys: `HADAMARD_SEED` for a
//! top-level key, `HADAMARD_SR_CURVE__TOL` for `tol` in `[sr-curve]`. Values
//! are read as TOML values and fall back to plain strings.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::path::PathBuf;

use hadamard_dirichlet::expr::Expr;
use serde::Serialize;

pub const ENV_PREFIX: &str = "HADAMARD_";

const TOP_KEYS: [&str; 3] = ["command", "output_dir", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckProfile,
    CheckManifold,
    Barrier,
    SrCurve,
    CertifyConvexity,
    Borbely,
    Solve,
    Cascade,
    Report,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::CheckProfile,
        Command::CheckManifold,
        Command::Barrier,
        Command::SrCurve,
        Command::CertifyConvexity,
        Command::Borbely,
        Command::Solve,
        Command::Cascade,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckProfile => "check-profile",
            Command::CheckManifold => "check-manifold",
            Command::Barrier => "barrier",
            Command::SrCurve => "sr-curve",
            Command::CertifyConvexity => "certify-convexity",
            Command::Borbely => "borbely",
            Command::Solve => "solve",
            Command::Cascade => "cascade",
            Command::Report => "report",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    fn env_name(self) -> String {
        self.name().to_ascii_uppercase().replace('-', "_")
    }

    fn schema(self) -> Vec<Key> {
        let mut keys = Vec::new();
        let manifold = [
            key("warping", Ty::Choice(&["hyperbolic", "sinh_scaled", "custom"]), Def::S("hyperbolic")),
            key("k", pos(), Def::F(1.0)),
            key("q", pos(), Def::Opt),
            key("f", Ty::Expr("r"), Def::Opt),
            key("f_prime", Ty::Expr("r"), Def::Opt),
            key("f_double_prime", Ty::Expr("r"), Def::Opt),
            key("r_max", pos(), Def::F(50.0)),
        ];
        let profile = [
            key("p", Ty::Float { lo: 1.0, lo_open: true, hi: f64::INFINITY }, Def::Opt),
            key("profile", Ty::Choice(&["p_laplacian", "minimal"]), Def::Opt),
        ];
        let newton = [
            key("tol_newton", pos(), Def::F(1e-10)),
            key("max_newton", Ty::Int { lo: 1, hi: 10_000 }, Def::I(60)),
            key("damping_floor", Ty::Float { lo: 0.0, lo_open: true, hi: 1.0 }, Def::F(0.5f64.powi(20))),
            key("regularization", pos(), Def::Opt),
        ];
        match self {
            Command::CheckProfile => {
                keys.extend(profile);
                keys.extend([
                    key("s_min", pos(), Def::F(1e-6)),
                    key("s_max", pos(), Def::F(1e6)),
                    key("n_s", count(2), Def::I(121)),
                ]);
            }
            Command::CheckManifold => {
                keys.extend(manifold);
                keys.extend([
                    key("r_min", pos(), Def::F(0.02)),
                    key("r_check", pos(), Def::F(20.0)),
                    key("n_r", count(2), Def::I(1000)),
                    key("n", count(1), Def::I(2)),
                    key("divergence_p", Ty::Float { lo: 1.0, lo_open: true, hi: f64::INFINITY }, Def::F(2.0)),
                    key("divergence_cut", pos(), Def::F(40.0)),
                ]);
            }
            Command::Barrier => {
                keys.extend(profile);
                keys.extend([
                    key("k", pos(), Def::F(1.0)),
                    key("n", count(2), Def::I(2)),
                    key("height_c", pos(), Def::F(1.0)),
                    key("calibrate", Ty::Bool, Def::B(true)),
                    key("s_max", pos(), Def::F(10.0)),
                    key("n_s", count(2), Def::I(201)),
                ]);
            }
            Command::SrCurve => keys.extend([
                key("R", pos(), Def::Req),
                key("k", pos(), Def::Req),
                key("tol", pos(), Def::F(1e-10)),
                key("t_min", Ty::Float { lo: f64::NEG_INFINITY, lo_open: false, hi: 0.0 }, Def::F(-10.0)),
                key("t_max", nonneg(), Def::F(10.0)),
                key("n_samples", count(2), Def::I(2001)),
            ]),
            Command::CertifyConvexity => {
                keys.extend(manifold);
                keys.extend([
                    key("R", pos(), Def::F(1.0)),
                    key("t_min", Ty::Float { lo: f64::NEG_INFINITY, lo_open: false, hi: 0.0 }, Def::F(-10.0)),
                    key("t_max", nonneg(), Def::F(10.0)),
                    key("n_t", count(1), Def::I(200)),
                    key("n_angles", count(1), Def::I(50)),
                    key("tol", nonneg(), Def::F(1e-8)),
                ]);
            }
            Command::Borbely => keys.extend([
                key("k", pos(), Def::F(1.0)),
                key("eps", pos(), Def::F(1.0)),
                key("alpha", Ty::Float { lo: 0.0, lo_open: true, hi: FRAC_PI_2 }, Def::F(FRAC_PI_4)),
                key("r0", pos(), Def::Opt),
                key("r_stop", pos(), Def::Opt),
                key("max_steps", Ty::Int { lo: 0, hi: i64::MAX }, Def::I(1_000_000)),
            ]),
            Command::Solve => {
                keys.extend(manifold);
                keys.extend(profile);
                keys.extend(newton);
                keys.extend([
                    key("domain", Ty::Choice(&["ball", "annulus"]), Def::S("ball")),
                    key("radius", pos(), Def::F(2.0)),
                    key("r_in", pos(), Def::Opt),
                    key("r_out", pos(), Def::Opt),
                    key("n_r", count(8), Def::I(64)),
                    key("n_t", count(4), Def::I(128)),
                    key("data", Ty::Expr("t"), Def::S("cos(t)")),
                    key("inner", Ty::Expr("t"), Def::Opt),
                    key("outer", Ty::Expr("t"), Def::Opt),
                    key("oracle", Ty::Bool, Def::B(false)),
                ]);
            }
            Command::Cascade => {
                keys.extend(manifold);
                keys.extend(profile);
                keys.extend(newton);
                keys.extend([
                    key("radii", Ty::Floats, Def::L(&[2.0, 3.0, 4.0, 5.0])),
                    key("dr", pos(), Def::F(1.0 / 32.0)),
                    key("n_t", count(4), Def::I(128)),
                    key("data", Ty::Expr("t"), Def::S("cos(t)")),
                    key("tol_cascade", pos(), Def::F(1e-2)),
                ]);
            }
            Command::Report => {
                keys.extend(manifold);
                keys.extend(profile);
                keys.extend([
                    key("n", count(2), Def::I(2)),
                    key("height_c", pos(), Def::F(1.0)),
                    key("R", pos(), Def::F(1.0)),
                ]);
            }
        }
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Syntax,
    UnknownKey,
    WrongType,
    OutOfRange,
    Missing,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub kind: ErrorKind,
    /// 1-based line in the config document.
    pub line: Option<usize>,
    /// Environment variable the offending value came from.
    pub env: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.env, self.line) {
            (Some(var), _) => write!(f, "{var}: {}", self.message),
            (None, Some(line)) => write!(f, "line {line}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<f64>),
}

/// Validated parameters of one command, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn opt_f(&self, key: &str) -> Option<f64> {
        match self.0.get(key) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn f(&self, key: &str) -> f64 {
        self.opt_f(key).unwrap_or_else(|| panic!("float parameter `{key}` is not set"))
    }

    pub fn count(&self, key: &str) -> usize {
        match self.0.get(key) {
            Some(Value::Int(n)) => *n as usize,
            _ => panic!("integer parameter `{key}` is not set"),
        }
    }

    pub fn opt_text(&self, key: &str) -> Option<&str> {
        match self.0.get(key) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> &str {
        self.opt_text(key).unwrap_or_else(|| panic!("text parameter `{key}` is not set"))
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.0.get(key), Some(Value::Bool(true)))
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.0.get(key) {
            Some(Value::List(v)) => v,
            _ => panic!("list parameter `{key}` is not set"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub params: Params,
}

impl RunConfig {
    /// The effective configuration as a JSON object shaped like the input.
    pub fn echo(&self) -> serde_json::Value {
        let mut top = serde_json::Map::new();
        top.insert("command".into(), self.command.name().into());
        top.insert("output_dir".into(), self.output_dir.display().to_string().into());
        top.insert("seed".into(), self.seed.into());
        top.insert(
            self.command.name().into(),
            serde_json::to_value(&self.params).expect("parameters serialize"),
        );
        serde_json::Value::Object(top)
    }

    /// The effective configuration as a TOML document.
    pub fn to_toml(&self) -> String {
        let mut table = toml::Table::new();
        table.insert("command".into(), self.command.name().into());
        table.insert("output_dir".into(), self.output_dir.display().to_string().into());
        table.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        let mut section = toml::Table::new();
        for (k, v) in &self.params.0 {
            let v = match v {
                Value::Bool(b) => toml::Value::Boolean(*b),
                Value::Int(n) => toml::Value::Integer(*n),
                Value::Float(x) => toml::Value::Float(*x),
                Value::Text(s) => toml::Value::String(s.clone()),
                Value::List(xs) => toml::Value::Array(xs.iter().map(|&x| toml::Value::Float(x)).collect()),
            };
            section.insert(k.clone(), v);
        }
        table.insert(self.command.name().into(), toml::Value::Table(section));
        toml::to_string(&table).expect("config serializes")
    }
}

#[derive(Clone, Copy)]
enum Ty {
    Float { lo: f64, lo_open: bool, hi: f64 },
    Int { lo: i64, hi: i64 },
    Bool,
    Choice(&'static [&'static str]),
    /// Expression in the named variable.
    Expr(&'static str),
    /// Nonempty strictly increasing list of positive numbers.
    Floats,
}

enum Def {
    Req,
    Opt,
    F(f64),
    I(i64),
    B(bool),
    S(&'static str),
    L(&'static [f64]),
}

struct Key {
    name: &'static str,
    ty: Ty,
    def: Def,
}

fn key(name: &'static str, ty: Ty, def: Def) -> Key {
    Key { name, ty, def }
}

fn pos() -> Ty {
    Ty::Float { lo: 0.0, lo_open: true, hi: f64::INFINITY }
}

fn nonneg() -> Ty {
    Ty::Float { lo: 0.0, lo_open: false, hi: f64::INFINITY }
}

fn count(lo: i64) -> Ty {
    Ty::Int { lo, hi: 1 << 24 }
}

#[derive(Debug, Clone)]
enum Origin {
    Line(Option<usize>),
    Env(String),
}

impl Origin {
    fn error(&self, kind: ErrorKind, message: String) -> ConfigError {
        match self {
            Origin::Line(line) => ConfigError { kind, line: *line, env: None, message },
            Origin::Env(var) => ConfigError { kind, line: None, env: Some(var.clone()), message },
        }
    }
}

// Line of each `key =` and `[section]` in the document, first occurrence wins.
struct Lines {
    keys: BTreeMap<(String, String), usize>,
    sections: BTreeMap<String, usize>,
}

impl Lines {
    fn scan(text: &str) -> Self {
        let unquote = |s: &str| s.trim().trim_matches('"').trim_matches('\'').to_string();
        let mut keys = BTreeMap::new();
        let mut sections = BTreeMap::new();
        let mut current = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('[') {
                if let Some(end) = rest.find(']') {
                    current = unquote(&rest[..end]);
                    sections.entry(current.clone()).or_insert(n + 1);
                }
            } else if let Some(eq) = line.find('=') {
                if !line.starts_with('#') {
                    keys.entry((current.clone(), unquote(&line[..eq]))).or_insert(n + 1);
                }
            }
        }
        Self { keys, sections }
    }

    fn key(&self, section: &str, key: &str) -> Option<usize> {
        self.keys.get(&(section.to_string(), key.to_string())).copied()
    }
}

type Entries = BTreeMap<String, (toml::Value, Origin)>;

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with_env(text, std::iter::empty::<(String, String)>())
}

/// Parses `text`, then applies `HADAMARD_*` overrides from `env`.
pub fn parse_config_with_env<I>(text: &str, env: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        kind: ErrorKind::Syntax,
        line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        env: None,
        message: e.message().to_string(),
    })?;
    let lines = Lines::scan(text);

    let mut top: Entries = BTreeMap::new();
    let mut sections: BTreeMap<String, Entries> = BTreeMap::new();
    for (name, value) in doc {
        let line = Origin::Line(lines.key("", &name).or_else(|| lines.sections.get(&name).copied()));
        match value {
            toml::Value::Table(t) => {
                if Command::from_name(&name).is_none() {
                    return Err(line.error(ErrorKind::UnknownKey, format!("unknown section [{name}]")));
                }
                let entries = t
                    .into_iter()
                    .map(|(k, v)| {
                        let origin = Origin::Line(lines.key(&name, &k));
                        (k, (v, origin))
                    })
                    .collect();
                sections.insert(name, entries);
            }
            v => {
                if !TOP_KEYS.contains(&name.as_str()) {
                    return Err(line.error(ErrorKind::UnknownKey, format!("unknown key `{name}`")));
                }
                top.insert(name, (v, line));
            }
        }
    }

    let mut env: Vec<(String, String)> =
        env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    env.sort();
    for (var, raw) in env {
        let rest = &var[ENV_PREFIX.len()..];
        let value = env_value(&raw);
        let origin = Origin::Env(var.clone());
        if let Some((sec, k)) = rest.split_once("__") {
            let Some(cmd) = Command::ALL.into_iter().find(|c| c.env_name() == sec) else {
                return Err(origin.error(ErrorKind::UnknownKey, format!("no section matches `{sec}`")));
            };
            let Some(name) = cmd.schema().iter().find(|s| s.name.eq_ignore_ascii_case(k)).map(|s| s.name) else {
                return Err(origin.error(ErrorKind::UnknownKey, format!("unknown key `{k}` for [{}]", cmd.name())));
            };
            sections.entry(cmd.name().to_string()).or_default().insert(name.to_string(), (value, origin));
        } else {
            let name = rest.to_ascii_lowercase();
            if !TOP_KEYS.contains(&name.as_str()) {
                return Err(origin.error(ErrorKind::UnknownKey, format!("unknown key `{name}`")));
            }
            top.insert(name, (value, origin));
        }
    }

    let command = match top.get("command") {
        None => {
            return Err(ConfigError {
                kind: ErrorKind::Missing,
                line: Some(1),
                env: None,
                message: "missing required key `command`".into(),
            })
        }
        Some((toml::Value::String(s), origin)) => Command::from_name(s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            origin.error(ErrorKind::OutOfRange, format!("unknown command `{s}` (one of {})", names.join(", ")))
        })?,
        Some((v, origin)) => {
            return Err(origin.error(ErrorKind::WrongType, format!("`command` must be a string, got {v}")))
        }
    };
    let output_dir = match top.get("output_dir") {
        None => PathBuf::from("out"),
        Some((toml::Value::String(s), _)) => PathBuf::from(s),
        Some((v, origin)) => {
            return Err(origin.error(ErrorKind::WrongType, format!("`output_dir` must be a string, got {v}")))
        }
    };
    let seed = match top.get("seed") {
        None => 0,
        Some((toml::Value::Integer(n), _)) if *n >= 0 => *n as u64,
        Some((v, origin)) => {
            return Err(origin.error(ErrorKind::OutOfRange, format!("`seed` must be a nonnegative integer, got {v}")))
        }
    };

    let mut params = None;
    for cmd in Command::ALL {
        let entries = sections.remove(cmd.name()).unwrap_or_default();
        let header = Origin::Line(lines.sections.get(cmd.name()).copied().or(Some(1)));
        let checked = check_section(cmd, &entries, &header, cmd == command)?;
        if cmd == command {
            cross_check(cmd, &checked, &entries, &header)?;
            params = Some(checked);
        }
    }
    Ok(RunConfig { command, output_dir, seed, params: params.expect("command section checked") })
}

fn env_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn check_section(cmd: Command, entries: &Entries, header: &Origin, fill: bool) -> Result<Params, ConfigError> {
    let schema = cmd.schema();
    for (name, (_, origin)) in entries {
        if !schema.iter().any(|k| k.name == name) {
            return Err(origin.error(ErrorKind::UnknownKey, format!("unknown key `{name}` in [{}]", cmd.name())));
        }
    }
    let mut out = BTreeMap::new();
    for k in &schema {
        let value = match entries.get(k.name) {
            Some((v, origin)) => check_value(cmd, k, v).map_err(|(kind, msg)| origin.error(kind, msg))?,
            None if !fill => continue,
            None => match &k.def {
                Def::Req => {
                    return Err(header.error(
                        ErrorKind::Missing,
                        format!("missing required key `{}` in [{}]", k.name, cmd.name()),
                    ))
                }
                Def::Opt => continue,
                Def::F(x) => Value::Float(*x),
                Def::I(n) => Value::Int(*n),
                Def::B(b) => Value::Bool(*b),
                Def::S(s) => Value::Text(s.to_string()),
                Def::L(xs) => Value::List(xs.to_vec()),
            },
        };
        out.insert(k.name.to_string(), value);
    }
    Ok(Params(out))
}

fn check_value(cmd: Command, k: &Key, v: &toml::Value) -> Result<Value, (ErrorKind, String)> {
    let at = format!("{}.{}", cmd.name(), k.name);
    let wrong = |what: &str| (ErrorKind::WrongType, format!("`{at}` must be {what}, got {v}"));
    let float = |v: &toml::Value| match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(n) => Some(*n as f64),
        _ => None,
    };
    match k.ty {
        Ty::Float { lo, lo_open, hi } => {
            let x = float(v).ok_or_else(|| wrong("a number"))?;
            let above = if lo_open { x > lo } else { x >= lo };
            if !(above && x <= hi) {
                let open = if lo_open { "(" } else { "[" };
                return Err((ErrorKind::OutOfRange, format!("`{at}` = {x} is outside {open}{lo}, {hi}]")));
            }
            Ok(Value::Float(x))
        }
        Ty::Int { lo, hi } => {
            let toml::Value::Integer(n) = v else { return Err(wrong("an integer")) };
            if !(lo..=hi).contains(n) {
                return Err((ErrorKind::OutOfRange, format!("`{at}` = {n} is outside [{lo}, {hi}]")));
            }
            Ok(Value::Int(*n))
        }
        Ty::Bool => match v {
            toml::Value::Boolean(b) => Ok(Value::Bool(*b)),
            _ => Err(wrong("true or false")),
        },
        Ty::Choice(options) => {
            let toml::Value::String(s) = v else { return Err(wrong("a string")) };
            if !options.contains(&s.as_str()) {
                return Err((ErrorKind::OutOfRange, format!("`{at}` = \"{s}\" is not one of {}", options.join(", "))));
            }
            Ok(Value::Text(s.clone()))
        }
        Ty::Expr(var) => {
            let toml::Value::String(s) = v else { return Err(wrong("an expression string")) };
            Expr::parse_in(s, var).map_err(|e| (ErrorKind::OutOfRange, format!("`{at}`: {e}")))?;
            Ok(Value::Text(s.clone()))
        }
        Ty::Floats => {
            let toml::Value::Array(items) = v else { return Err(wrong("an array of numbers")) };
            let xs: Vec<f64> = items.iter().map(float).collect::<Option<_>>().ok_or_else(|| wrong("an array of numbers"))?;
            if xs.is_empty() || xs[0] <= 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) {
                return Err((ErrorKind::OutOfRange, format!("`{at}` must be positive and strictly increasing")));
            }
            Ok(Value::List(xs))
        }
    }
}

fn cross_check(cmd: Command, p: &Params, entries: &Entries, header: &Origin) -> Result<(), ConfigError> {
    let origin = |name: &str| entries.get(name).map_or(header, |(_, o)| o).clone();
    let schema = cmd.schema();
    let has = |name: &str| schema.iter().any(|k| k.name == name);
    let at = cmd.name();

    if has("profile") {
        match (p.opt_f("p"), p.opt_text("profile")) {
            (Some(_), Some("minimal")) => {
                return Err(origin("profile").error(
                    ErrorKind::Conflict,
                    format!("`{at}.p` and `{at}.profile = \"minimal\"` are mutually exclusive"),
                ))
            }
            (None, Some("p_laplacian")) => {
                return Err(origin("profile").error(ErrorKind::Missing, format!("`{at}.profile = \"p_laplacian\"` needs `p`")))
            }
            (None, None) => {
                return Err(header.error(ErrorKind::Missing, format!("[{at}] needs `p` or `profile = \"minimal\"`")))
            }
            _ => {}
        }
    }
    if has("warping") {
        match p.text("warping") {
            "sinh_scaled" => match p.opt_f("q") {
                None => return Err(origin("warping").error(ErrorKind::Missing, format!("`{at}.warping = \"sinh_scaled\"` needs `q`"))),
                Some(q) if q < p.f("k") => {
                    return Err(origin("q").error(ErrorKind::OutOfRange, format!("`{at}.q` = {q} is below k = {}", p.f("k"))))
                }
                _ => {}
            },
            "custom" => {
                for name in ["f", "f_prime", "f_double_prime"] {
                    if p.opt_text(name).is_none() {
                        return Err(origin("warping").error(ErrorKind::Missing, format!("`{at}.warping = \"custom\"` needs `{name}`")));
                    }
                }
            }
            _ => {}
        }
    }
    match cmd {
        Command::CheckProfile if p.f("s_min") >= p.f("s_max") => {
            Err(origin("s_max").error(ErrorKind::OutOfRange, format!("`{at}.s_max` must exceed `s_min`")))
        }
        Command::CheckManifold if p.f("r_min") >= p.f("r_check") => {
            Err(origin("r_check").error(ErrorKind::OutOfRange, format!("`{at}.r_check` must exceed `r_min`")))
        }
        Command::Solve | Command::Cascade if p.count("n_t") % 2 != 0 => {
            Err(origin("n_t").error(ErrorKind::OutOfRange, format!("`{at}.n_t` = {} must be even", p.count("n_t"))))
        }
        Command::Solve => {
            let ball = p.text("domain") == "ball";
            if ball {
                for name in ["r_in", "r_out", "inner", "outer"] {
                    if p.get(name).is_some() {
                        return Err(origin(name).error(ErrorKind::Conflict, format!("`{at}.{name}` needs `domain = \"annulus\"`")));
                    }
                }
            } else {
                for name in ["r_in", "r_out", "inner", "outer"] {
                    if p.get(name).is_none() {
                        return Err(origin("domain").error(ErrorKind::Missing, format!("`{at}.domain = \"annulus\"` needs `{name}`")));
                    }
                }
                if p.f("r_in") >= p.f("r_out") {
                    return Err(origin("r_out").error(ErrorKind::OutOfRange, format!("`{at}.r_out` must exceed `r_in`")));
                }
            }
            let outer = if ball { p.f("radius") } else { p.f("r_out") };
            if outer > p.f("r_max") {
                return Err(origin("r_max").error(
                    ErrorKind::OutOfRange,
                    format!("domain radius {outer} exceeds `{at}.r_max` = {}", p.f("r_max")),
                ));
            }
            if p.flag("oracle")
                && !(ball && p.text("warping") == "hyperbolic" && p.opt_f("p") == Some(2.0))
            {
                return Err(origin("oracle").error(
                    ErrorKind::Conflict,
                    "`oracle = true` needs a ball, the hyperbolic warping and p = 2".into(),
                ));
            }
            Ok(())
        }
        Command::Cascade => {
            let last = *p.list("radii").last().expect("radii are nonempty");
            if last > p.f("r_max") {
                return Err(origin("radii").error(ErrorKind::OutOfRange, format!("radius {last} exceeds `{at}.r_max`")));
            }
            Ok(())
        }
        Command::SrCurve | Command::CertifyConvexity if p.f("t_min") == p.f("t_max") => {
            Err(origin("t_max").error(ErrorKind::OutOfRange, format!("`{at}` needs t_min < t_max")))
        }
        Command::Borbely => match (p.opt_f("r0"), p.opt_f("r_stop")) {
            (Some(r0), Some(stop)) if stop <= r0 => {
                Err(origin("r_stop").error(ErrorKind::OutOfRange, format!("`{at}.r_stop` must exceed `r0`")))
            }
            _ => Ok(()),
        },
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sr_curve_defaults() {
        let c = parse_config("command = \"sr-curve\"\n[sr-curve]\nR = 1\nk = 1.0\n").unwrap();
        assert_eq!(c.command, Command::SrCurve);
        assert_eq!(c.params.f("tol"), 1e-10);
        assert_eq!(c.params.f("R"), 1.0);
        assert_eq!(c.params.count("n_samples"), 2001);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn p_below_one_is_out_of_range() {
        let e = parse_config("command = \"solve\"\n\n[solve]\np = 0.5\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::OutOfRange);
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn p_and_minimal_conflict() {
        let e = parse_config("command = \"solve\"\n[solve]\np = 2\nprofile = \"minimal\"\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Conflict);
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn zero_grid_size_rejected() {
        let e = parse_config("command = \"solve\"\n[solve]\np = 2\nn_r = 0\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::OutOfRange, Some(4)));
    }

    #[test]
    fn unknown_keys_and_sections() {
        let e = parse_config("command = \"solve\"\n[solve]\np = 2\nn_rr = 16\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::UnknownKey, Some(4)));
        let e = parse_config("command = \"solve\"\n[solver]\np = 2\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::UnknownKey, Some(2)));
        let e = parse_config("colour = 1\ncommand = \"solve\"\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::UnknownKey, Some(1)));
    }

    #[test]
    fn inactive_sections_are_validated() {
        let text = "command = \"borbely\"\n[solve]\np = 0.5\n";
        assert_eq!(parse_config(text).unwrap_err().line, Some(3));
    }

    #[test]
    fn missing_keys_point_at_the_section() {
        let e = parse_config("command = \"sr-curve\"\n\n[sr-curve]\nk = 1\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::Missing, Some(3)));
        let e = parse_config("[solve]\np = 2\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Missing);
        let e = parse_config("command = \"solve\"\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Missing);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = parse_config("command = \"solve\"\n[solve]\np = = 2\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::Syntax, Some(3)));
    }

    #[test]
    fn type_errors() {
        let e = parse_config("command = \"solve\"\n[solve]\np = 2\nn_r = 8.5\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::WrongType);
        let e = parse_config("command = \"solve\"\n[solve]\np = 2\ndata = \"cos(r)\"\n").unwrap_err();
        assert_eq!((e.kind, e.line), (ErrorKind::OutOfRange, Some(4)));
    }

    #[test]
    fn env_overrides() {
        let text = "command = \"sr-curve\"\n[sr-curve]\nR = 1\nk = 1\n";
        let env = [
            ("HADAMARD_SR_CURVE__TOL".to_string(), "1e-8".to_string()),
            ("HADAMARD_OUTPUT_DIR".to_string(), "elsewhere".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let c = parse_config_with_env(text, env).unwrap();
        assert_eq!(c.params.f("tol"), 1e-8);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));

        let bad = [("HADAMARD_SR_CURVE__TOL".to_string(), "-1".to_string())];
        let e = parse_config_with_env(text, bad).unwrap_err();
        assert_eq!(e.env.as_deref(), Some("HADAMARD_SR_CURVE__TOL"));
        let unknown = [("HADAMARD_SR_CURVE__NOPE".to_string(), "1".to_string())];
        assert_eq!(parse_config_with_env(text, unknown).unwrap_err().kind, ErrorKind::UnknownKey);
    }

    #[test]
    fn annulus_needs_both_rings() {
        let base = "command = \"solve\"\n[solve]\np = 2\ndomain = \"annulus\"\nr_in = 1\nr_out = 2\n";
        assert_eq!(parse_config(base).unwrap_err().kind, ErrorKind::Missing);
        let full = format!("{base}inner = \"0\"\nouter = \"1\"\n");
        assert!(parse_config(&full).is_ok());
        let e = parse_config("command = \"solve\"\n[solve]\np = 2\nr_in = 1\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Conflict);
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config("command = \"cascade\"\nseed = 7\n[cascade]\nprofile = \"minimal\"\n").unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.echo()["cascade"]["radii"], serde_json::json!([2.0, 3.0, 4.0, 5.0]));
    }
}
