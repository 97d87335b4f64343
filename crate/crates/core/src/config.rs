//! Run configuration.
//!
//! Config files are TOML with five sections; every key is optional except
//! `run.command` (which the command line may supply instead):
//!
//! ```toml
//! [run]
//! command = "verify-measure"   # simulate | price | verify-measure | verify-correlation
//! n_paths = 100000
//! seed = 42
//! output = "report.csv"
//! measure = "P"                # simulate only: P | Q
//!
//! [model]                      # any HtbParams field
//! sigma = 0.3
//! rho = 0.5
//!
//! [risk_premium]
//! kind = "constant"            # zero | constant (c) | affine (a, b)
//! c = 0.1
//!
//! [grid]
//! horizon = 1.0
//! n_steps = 500
//!
//! [option]                     # defaults to an at-the-money call at the horizon
//! kind = "call"                # call | put
//! strike = 100.0
//! maturity = 1.0
//! ```
//!
//! Unknown sections or keys are rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{HtbError, Result};
use crate::model::{HtbParams, RiskPremiumSpec};
use crate::pricing::{OptionKind, OptionSpec};
use crate::simulator::{Measure, PathGrid};

pub const DEFAULT_N_PATHS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_N_STEPS: usize = 500;
pub const DEFAULT_OUTPUT: &str = "htb-output.csv";

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["command", "n_paths", "seed", "output", "measure"]),
    ("model", &["sigma", "kappa", "rho", "gamma", "alpha", "x_bar", "beta", "r", "lambda0", "s0", "x0", "lambda_max"]),
    ("risk_premium", &["kind", "c", "a", "b"]),
    ("grid", &["horizon", "n_steps"]),
    ("option", &["kind", "strike", "maturity"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Price,
    VerifyMeasure,
    VerifyCorrelation,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Price => "price",
            Command::VerifyMeasure => "verify-measure",
            Command::VerifyCorrelation => "verify-correlation",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = HtbError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Command::Simulate),
            "price" => Ok(Command::Price),
            "verify-measure" => Ok(Command::VerifyMeasure),
            "verify-correlation" => Ok(Command::VerifyCorrelation),
            other => Err(HtbError::param(
                "run.command",
                format!("unknown command `{other}`; expected simulate, price, verify-measure or verify-correlation"),
            )),
        }
    }
}

/// Validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: HtbParams,
    pub riskspec: RiskPremiumSpec,
    pub grid: PathGrid,
    pub option: Option<OptionSpec>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub command: Command,
    pub output_path: PathBuf,
    /// Measure used by `simulate`.
    pub measure: Measure,
}

impl RunConfig {
    /// The configured option, or an at-the-money call expiring at the
    /// horizon.
    pub fn option_or_default(&self) -> OptionSpec {
        self.option.unwrap_or(OptionSpec::call(self.params.s0, self.grid.horizon()))
    }
}

/// Values that take precedence over the document (command-line flags).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawRun {
    command: Option<String>,
    n_paths: Option<i64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    measure: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawPremium {
    kind: Option<String>,
    c: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RawGrid {
    horizon: f64,
    n_steps: i64,
}

impl Default for RawGrid {
    fn default() -> Self {
        RawGrid { horizon: DEFAULT_HORIZON, n_steps: DEFAULT_N_STEPS as i64 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawOption {
    kind: Option<String>,
    strike: Option<f64>,
    maturity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawConfig {
    run: RawRun,
    model: HtbParams,
    risk_premium: RawPremium,
    grid: RawGrid,
    option: Option<RawOption>,
}

fn check_keys(table: &toml::Table) -> Result<()> {
    for (section, value) in table {
        let Some((_, keys)) = SECTIONS.iter().find(|(name, _)| name == section) else {
            return Err(HtbError::Config(format!("unknown key `{section}`")));
        };
        let Some(inner) = value.as_table() else {
            return Err(HtbError::Config(format!("`{section}` must be a section")));
        };
        for key in inner.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(HtbError::Config(format!("unknown key `{section}.{key}`")));
            }
        }
    }
    Ok(())
}

fn premium(raw: &RawPremium) -> Result<RiskPremiumSpec> {
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| HtbError::Config(format!("missing required key `risk_premium.{key}`")))
    };
    let unused = |v: Option<f64>, key: &str, kind: &str| match v {
        Some(_) => Err(HtbError::param(format!("risk_premium.{key}"), format!("not used by kind `{kind}`"))),
        None => Ok(()),
    };
    let spec = match raw.kind.as_deref().unwrap_or("zero") {
        "zero" => {
            unused(raw.c, "c", "zero")?;
            unused(raw.a, "a", "zero")?;
            unused(raw.b, "b", "zero")?;
            RiskPremiumSpec::Zero
        }
        "constant" => {
            unused(raw.a, "a", "constant")?;
            unused(raw.b, "b", "constant")?;
            RiskPremiumSpec::Constant(need(raw.c, "c")?)
        }
        "affine" => {
            unused(raw.c, "c", "affine")?;
            RiskPremiumSpec::AffineInX { a: need(raw.a, "a")?, b: need(raw.b, "b")? }
        }
        other => {
            return Err(HtbError::param(
                "risk_premium.kind",
                format!("unknown kind `{other}`; expected zero, constant or affine"),
            ))
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn option(raw: &RawOption, params: &HtbParams, grid: &PathGrid) -> Result<OptionSpec> {
    let kind = match raw.kind.as_deref().unwrap_or("call") {
        "call" => OptionKind::Call,
        "put" => OptionKind::Put,
        other => return Err(HtbError::param("option.kind", format!("unknown kind `{other}`; expected call or put"))),
    };
    let spec =
        OptionSpec { kind, strike: raw.strike.unwrap_or(params.s0), maturity: raw.maturity.unwrap_or(grid.horizon()) };
    spec.validate()?;
    if spec.maturity > grid.horizon() {
        return Err(HtbError::param(
            "option.maturity",
            format!("must be <= grid.horizon = {}, got {}", grid.horizon(), spec.maturity),
        ));
    }
    Ok(spec)
}

/// Parses a config document with no command-line overrides.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| HtbError::Config(e.to_string()))?;
    check_keys(&table)?;
    let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| HtbError::Config(e.to_string()))?;

    let command = match (overrides.command, raw.run.command.as_deref()) {
        (Some(c), _) => c,
        (None, Some(s)) => s.parse()?,
        (None, None) => return Err(HtbError::Config("missing required key `run.command`".into())),
    };
    let n_paths = match overrides.n_paths {
        Some(n) => n as i64,
        None => raw.run.n_paths.unwrap_or(DEFAULT_N_PATHS as i64),
    };
    if n_paths < 1 {
        return Err(HtbError::param("run.n_paths", format!("must be >= 1, got {n_paths}")));
    }

    let measure = match raw.run.measure.as_deref().unwrap_or("P") {
        "P" | "p" => Measure::P,
        "Q" | "q" => Measure::Q,
        other => return Err(HtbError::param("run.measure", format!("expected P or Q, got `{other}`"))),
    };

    let params = raw.model;
    params.validate()?;
    let riskspec = premium(&raw.risk_premium)?;
    if raw.grid.n_steps < 1 {
        return Err(HtbError::param("grid.n_steps", format!("must be >= 1, got {}", raw.grid.n_steps)));
    }
    let grid = PathGrid::new(raw.grid.horizon, raw.grid.n_steps as usize, params.lambda_max)?;
    let option = raw.option.as_ref().map(|o| option(o, &params, &grid)).transpose()?;

    Ok(RunConfig {
        params,
        riskspec,
        grid,
        option,
        n_paths: n_paths as usize,
        master_seed: overrides.seed.or(raw.run.seed).unwrap_or(DEFAULT_SEED),
        command,
        output_path: overrides.output.clone().or(raw.run.output).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
        measure,
    })
}
