//! Config-driven front end for `hadamard-dirichlet`.
//!
//! A run reads one TOML document (see [`config`]), executes the selected
//! command and writes its artifacts to the output directory:
//!
//! * `<command>.json`: verdict, result, effective config, versions and timing;
//! * CSV tables (`solution.csv`, `schedule.csv`, ...) with a header row;
//! * `effective_config.toml`;
//! * `error.json` instead when the run fails.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config
//! error, 3 numerical nonconvergence.

pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use hadamard_dirichlet::Error;
use serde_json::json;

use config::{ConfigError, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// A run that did not produce a verdict.
#[derive(Debug)]
pub struct Failure {
    pub exit_code: i32,
    pub kind: &'static str,
    pub category: String,
    pub line: Option<usize>,
    pub message: String,
}

impl Failure {
    pub fn io(what: &str, path: &Path, err: std::io::Error) -> Self {
        Self {
            exit_code: EXIT_CONFIG,
            kind: "io",
            category: format!("{:?}", err.kind()),
            line: None,
            message: format!("{what} {}: {err}", path.display()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "status": "error",
            "exit_code": self.exit_code,
            "error": {
                "kind": self.kind,
                "category": self.category,
                "line": self.line,
                "message": self.message,
            },
            "versions": versions(),
        })
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let category = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_string));
        Self {
            exit_code: EXIT_CONFIG,
            kind: "config",
            category: category.unwrap_or_default(),
            line: e.line,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (exit_code, category) = match &e {
            Error::Domain(_) => (EXIT_CONFIG, "domain"),
            Error::Range(_) => (EXIT_CONFIG, "range"),
            Error::Expression { .. } => (EXIT_CONFIG, "expression"),
            Error::Shape(_) => (EXIT_CONFIG, "shape"),
            Error::Precondition(_) => (EXIT_CHECK_FAILED, "precondition"),
            Error::Verification { .. } => (EXIT_CHECK_FAILED, "verification"),
            Error::Infeasible(_) => (EXIT_CHECK_FAILED, "infeasible"),
            Error::Calibration { .. } => (EXIT_CHECK_FAILED, "calibration"),
            Error::NonConvergence { .. } => (EXIT_NONCONVERGENCE, "nonconvergence"),
            Error::Integrator { .. } => (EXIT_NONCONVERGENCE, "integrator"),
            Error::Search(_) => (EXIT_NONCONVERGENCE, "search"),
        };
        Self { exit_code, kind: "numerical", category: category.into(), line: None, message: e.to_string() }
    }
}

pub fn versions() -> serde_json::Value {
    json!({
        "hadamard-cli": env!("CARGO_PKG_VERSION"),
        "hadamard-dirichlet": hadamard_dirichlet::VERSION,
    })
}

/// Files written by a successful run and its exit code.
#[derive(Debug)]
pub struct Completed {
    pub exit_code: i32,
    pub report: PathBuf,
    pub artifacts: Vec<String>,
}

/// Runs `config` and writes all artifacts into `dir`.
pub fn execute(config: &RunConfig, dir: &Path) -> Result<Completed, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io("cannot create", dir, e))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let outcome = commands::run(config)?;
    let wall = clock.elapsed().as_secs_f64();

    let mut artifacts = Vec::new();
    for table in &outcome.tables {
        output::write_csv(dir, table).map_err(|e| Failure::io("cannot write", &dir.join(&table.file), e))?;
        artifacts.push(table.file.clone());
    }
    let echo_path = dir.join("effective_config.toml");
    fs::write(&echo_path, config.to_toml()).map_err(|e| Failure::io("cannot write", &echo_path, e))?;
    artifacts.push("effective_config.toml".into());

    let exit_code = if outcome.pass { EXIT_PASS } else { EXIT_CHECK_FAILED };
    let name = config.command.name();
    let report = json!({
        "command": name,
        "status": if outcome.pass { "pass" } else { "fail" },
        "exit_code": exit_code,
        "config": config.echo(),
        "versions": versions(),
        "timing": { "started_unix_s": started, "wall_s": wall },
        "artifacts": artifacts,
        "result": outcome.result,
    });
    let path = dir.join(format!("{name}.json"));
    output::write_json(&path, &report).map_err(|e| Failure::io("cannot write", &path, e))?;
    Ok(Completed { exit_code, report: path, artifacts })
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
