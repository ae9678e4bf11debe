//! Model, regularization and discretization parameters.
//!
//! A run is fully described by a [`Config`] with three sections, read from a
//! TOML file:
//!
//! ```toml
//! [model]
//! n = 1.0
//! m = 1.0
//! a1 = 0.0
//! alpha = 0.2
//!
//! [reg]
//! eps = 0.0
//!
//! [disc]
//! a = 3.141592653589793
//! cells = 256
//! t_end = 1.0
//! ```
//!
//! Unknown keys are rejected. [`validate`] turns a raw config into a
//! [`ValidatedConfig`], which is immutable and cheap to share between threads.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Values this close to a pole of a closed-form antiderivative count as the pole.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("exponent violation on `{field}`: {rule}")]
    ExponentViolation { field: &'static str, rule: String },
    #[error("degenerate denominator: {which} = {value} lies in {{-1, -2}}")]
    DegenerateDenominator { which: &'static str, value: f64 },
    #[error("invalid discretization `{field}`: {rule}")]
    Discretization { field: &'static str, rule: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("bad override `{0}`: {1}")]
    Override(String, String),
}

/// Exponents and coefficients of the PDE and of the monitored functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Mobility exponent.
    pub n: f64,
    /// Porous-media exponent of the second-order term.
    pub m: f64,
    /// Coefficient of the second-order term; positive is destabilizing.
    pub a1: f64,
    /// Weight exponent of the alpha-energy.
    pub alpha: f64,
    /// Exponent of the monitored beta-entropy.
    #[serde(default)]
    pub beta_ent: f64,
    /// Free parameter of the sum-of-squares decomposition. Defaults to
    /// `alpha (alpha - 1) / 4`, which removes the eps^2 term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl ModelParams {
    pub fn kappa(&self) -> f64 {
        self.kappa
            .unwrap_or(0.25 * self.alpha * (self.alpha - 1.0))
    }
}

/// Regularization of the degenerate problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegParams {
    /// Constant added to the mobility (uniform parabolicity).
    #[serde(default)]
    pub delta: f64,
    /// Degeneracy approximation parameter.
    #[serde(default)]
    pub eps: f64,
    /// Approximation exponent, at least 4.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Exponent of the initial-data lift `eps^theta`.
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_s() -> f64 {
    4.0
}
fn default_theta() -> f64 {
    0.3
}

impl Default for RegParams {
    fn default() -> Self {
        RegParams { delta: 0.0, eps: 0.0, s: default_s(), theta: default_theta() }
    }
}

/// How the cell mobilities `f(h_i)`, `f(h_{i+1})` are combined at a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityAveraging {
    #[default]
    Arithmetic,
    Harmonic,
    /// `1 / mean(1/f)` along the segment between the two cell values.
    Entropic,
}

impl fmt::Display for MobilityAveraging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MobilityAveraging::Arithmetic => "arithmetic",
            MobilityAveraging::Harmonic => "harmonic",
            MobilityAveraging::Entropic => "entropic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscParams {
    /// Half-length of the periodic domain `(-a, a)`.
    pub a: f64,
    /// Number of cells (even, at least 8).
    pub cells: usize,
    #[serde(default = "default_dt0")]
    pub dt0: f64,
    pub t_end: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default)]
    pub mobility_averaging: MobilityAveraging,
}

fn default_dt0() -> f64 {
    1e-4
}
fn default_newton_tol() -> f64 {
    1e-9
}
fn default_newton_max_iter() -> usize {
    25
}
fn default_dt_min() -> f64 {
    1e-12
}
fn default_dt_max() -> f64 {
    1e-1
}

impl DiscParams {
    /// Defaults for everything except the domain, resolution and horizon.
    pub fn new(a: f64, cells: usize, t_end: f64) -> Self {
        DiscParams {
            a,
            cells,
            dt0: default_dt0(),
            t_end,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            dt_min: default_dt_min(),
            dt_max: default_dt_max(),
            mobility_averaging: MobilityAveraging::default(),
        }
    }
}

/// Raw (unvalidated) run configuration; the on-disk format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelParams,
    #[serde(default)]
    pub reg: RegParams,
    pub disc: DiscParams,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config, ParamError> {
        toml::from_str(text).map_err(|e| ParamError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Applies `section.key=value` overrides, re-parsing through the same
    /// strict deserializer as the file format.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Config, ParamError> {
        let mut table: toml::Table = toml::from_str(&self.to_toml_string())
            .map_err(|e| ParamError::Parse(e.to_string()))?;
        for raw in overrides {
            let raw = raw.as_ref();
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| ParamError::Override(raw.into(), "expected key=value".into()))?;
            let (section, field) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| ParamError::Override(raw.into(), "expected section.key".into()))?;
            let parsed: toml::Value = parse_override_value(value.trim())
                .map_err(|e| ParamError::Override(raw.into(), e))?;
            let sect = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match sect {
                toml::Value::Table(t) => {
                    t.insert(field.to_string(), parsed);
                }
                _ => return Err(ParamError::Override(raw.into(), "not a section".into())),
            }
        }
        let text = toml::to_string(&table).map_err(|e| ParamError::Parse(e.to_string()))?;
        Config::from_toml_str(&text)
    }
}

fn parse_override_value(value: &str) -> Result<toml::Value, String> {
    if let Ok(i) = value.parse::<i64>() {
        return Ok(toml::Value::Integer(i));
    }
    if let Ok(x) = value.parse::<f64>() {
        return Ok(toml::Value::Float(x));
    }
    let bare = value.trim_matches('"');
    if bare.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !bare.is_empty() {
        return Ok(toml::Value::String(bare.to_string()));
    }
    Err(format!("cannot parse value `{value}`"))
}

/// A configuration that satisfies every parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    config: Config,
    warnings: Vec<String>,
}

impl ValidatedConfig {
    pub fn config(&self) -> &Config {
        &self.config
    }
    pub fn model(&self) -> &ModelParams {
        &self.config.model
    }
    pub fn reg(&self) -> &RegParams {
        &self.config.reg
    }
    pub fn disc(&self) -> &DiscParams {
        &self.config.disc
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ParamError> {
        let c = Config::from_toml_str(text)?;
        validate(c.model, c.reg, c.disc)
    }

    pub fn to_toml_string(&self) -> String {
        self.config.to_toml_string()
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        content_hash(&self.to_toml_string())
    }
}

/// Hex SHA-256 of `text`; used to tag every artifact with its inputs.
pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn is_pole(x: f64) -> bool {
    (x + 1.0).abs() < DEGENERACY_TOL || (x + 2.0).abs() < DEGENERACY_TOL
}

fn check(cond: bool, field: &'static str, rule: impl Into<String>) -> Result<(), ParamError> {
    if cond {
        Ok(())
    } else {
        Err(ParamError::ExponentViolation { field, rule: rule.into() })
    }
}

fn check_disc(cond: bool, field: &'static str, rule: impl Into<String>) -> Result<(), ParamError> {
    if cond {
        Ok(())
    } else {
        Err(ParamError::Discretization { field, rule: rule.into() })
    }
}

pub fn validate(
    model: ModelParams,
    reg: RegParams,
    disc: DiscParams,
) -> Result<ValidatedConfig, ParamError> {
    let mut warnings = Vec::new();
    let finite = [model.n, model.m, model.a1, model.alpha, model.beta_ent, reg.delta, reg.eps, reg.s, reg.theta]
        .iter()
        .all(|v| v.is_finite())
        && model.kappa.is_none_or(f64::is_finite);
    check(finite, "model/reg", "all parameters must be finite")?;

    check(model.n > 0.0, "n", "n > 0")?;
    if model.a1 > 0.0 {
        check(model.m >= model.n / 2.0, "m", "m >= n/2 when a1 > 0")?;
    } else {
        check(model.m > 0.0, "m", "m > 0 when a1 <= 0")?;
    }
    check(
        model.beta_ent > -0.5 && model.beta_ent < 1.0,
        "beta_ent",
        "-1/2 < beta_ent < 1",
    )?;
    if model.beta_ent == 0.0 {
        warnings.push("beta_ent = 0: entropy column is the baseline entropy G0".to_string());
    }
    if model.a1 != 0.0 {
        let shifted = model.alpha + model.m - model.n;
        if is_pole(shifted) {
            return Err(ParamError::DegenerateDenominator { which: "alpha + m - n", value: shifted });
        }
        let plain = model.m - model.n;
        if is_pole(plain) {
            return Err(ParamError::DegenerateDenominator { which: "m - n", value: plain });
        }
    }

    check(reg.s >= 4.0, "s", "s >= 4")?;
    let theta_max = 2.0 / (2.0 * reg.s - 3.0);
    check(
        reg.theta > 0.0 && reg.theta < theta_max,
        "theta",
        format!("0 < theta < 2/(2s-3) = {theta_max}"),
    )?;
    check(reg.delta >= 0.0, "delta", "delta >= 0")?;
    check(reg.eps >= 0.0, "eps", "eps >= 0")?;

    check_disc(disc.a.is_finite() && disc.a > 0.0, "a", "a > 0")?;
    check_disc(disc.cells >= 8, "cells", "at least 8 cells")?;
    check_disc(disc.cells.is_multiple_of(2), "cells", "cell count must be even")?;
    check_disc(disc.t_end.is_finite() && disc.t_end >= 0.0, "t_end", "t_end >= 0")?;
    check_disc(disc.dt_min > 0.0, "dt_min", "dt_min > 0")?;
    check_disc(
        disc.dt_min <= disc.dt0 && disc.dt0 <= disc.dt_max,
        "dt0",
        "dt_min <= dt0 <= dt_max",
    )?;
    check_disc(disc.newton_tol > 0.0, "newton_tol", "newton_tol > 0")?;
    check_disc(disc.newton_max_iter >= 1, "newton_max_iter", "at least one iteration")?;

    Ok(ValidatedConfig { config: Config { model, reg, disc }, warnings })
}
