//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults of
//! [`SolveConfig::burgers_default`] and of the study sizes below. Unknown keys
//! are rejected so that typos do not silently fall back to defaults.

use std::path::Path;

use fsb_core::{Error, FracParams, Polynomial, Result, SolveConfig, SpectralField};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

const KEYS: &[&str] = &[
    "alpha",
    "delta",
    "poly_coeffs",
    "u0_mode",
    "u0_coeffs",
    "T",
    "N",
    "M",
    "M_base",
    "G",
    "seed",
    "n_seeds",
    "N_list",
    "M_list",
    "lag_cap",
    "strict",
    "stochastic",
];

/// Study-level parameters that are not part of a single solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyParams {
    pub seed: u64,
    pub n_seeds: usize,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub strict: bool,
}

impl StudyParams {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.seed + i).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solve: SolveConfig,
    pub study: StudyParams,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {msg}"))
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(bad(key, format!("expected a number, found {}", type_name(other)))),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(bad(key, format!("expected a non-negative integer, found {i}"))),
        other => Err(bad(key, format!("expected an integer, found {}", type_name(other)))),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    as_u64(key, v).map(|x| x as usize)
}

fn as_list<T>(key: &str, v: &Value, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        Value::Array(items) => items.iter().map(|x| item(key, x)).collect(),
        other => Err(bad(key, format!("expected an array, found {}", type_name(other)))),
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("parse error: {e}")))?;
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "unknown key `{key}` (known keys: {})",
            KEYS.join(", ")
        )));
    }
    let get = |key: &str| table.get(key);

    let seed = get("seed").map(|v| as_u64("seed", v)).transpose()?.unwrap_or(0);
    let mut cfg = SolveConfig::burgers_default(seed);
    if let Some(v) = get("alpha") {
        cfg.params = FracParams::new(as_f64("alpha", v)?).map_err(|e| bad("alpha", e))?;
    }
    if let Some(v) = get("delta") {
        cfg.delta = as_f64("delta", v)?;
    }
    if let Some(v) = get("poly_coeffs") {
        cfg.poly = Polynomial::new(as_list("poly_coeffs", v, as_f64)?).map_err(|e| bad("poly_coeffs", e))?;
    }
    match (get("u0_mode"), get("u0_coeffs")) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("`u0_mode` and `u0_coeffs` are mutually exclusive".into()))
        }
        (Some(v), None) => {
            let k = as_usize("u0_mode", v)?;
            if k == 0 {
                return Err(bad("u0_mode", "modes are numbered from 1"));
            }
            cfg.u0 = SpectralField::mode(k, k, 1.0);
        }
        (None, Some(v)) => cfg.u0 = SpectralField::new(as_list("u0_coeffs", v, as_f64)?),
        (None, None) => {}
    }
    if let Some(v) = get("T") {
        let t = as_f64("T", v)?;
        cfg.final_time = t;
        cfg.noise.final_time = t;
    }
    if let Some(v) = get("stochastic") {
        cfg.stochastic = v
            .as_bool()
            .ok_or_else(|| bad("stochastic", format!("expected a boolean, found {}", type_name(v))))?;
    }
    let n = get("N").map(|v| as_usize("N", v)).transpose()?.unwrap_or(cfg.n_modes);
    cfg = cfg.with_modes(n);
    match get("G") {
        None => {}
        Some(Value::String(s)) if s == "auto" => {}
        Some(v) => cfg.grid_len = as_usize("G", v)?,
    }
    if let Some(v) = get("M_base") {
        cfg.noise.base_steps = as_usize("M_base", v)?;
    }
    cfg.steps = get("M")
        .map(|v| as_usize("M", v))
        .transpose()?
        .unwrap_or(cfg.noise.base_steps);
    if let Some(v) = get("lag_cap") {
        cfg.lag_cap = as_usize("lag_cap", v)?;
    }

    let strict = match get("strict") {
        None => false,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| bad("strict", format!("expected a boolean, found {}", type_name(v))))?,
    };
    let study = StudyParams {
        seed,
        n_seeds: get("n_seeds").map(|v| as_usize("n_seeds", v)).transpose()?.unwrap_or(8),
        n_list: get("N_list")
            .map(|v| as_list("N_list", v, as_usize))
            .transpose()?
            .unwrap_or_else(|| vec![8, 16, 32, 64]),
        m_list: get("M_list")
            .map(|v| as_list("M_list", v, as_usize))
            .transpose()?
            .unwrap_or_else(|| (5..=10).map(|e| 1 << e).collect()),
        strict,
    };
    if study.n_seeds == 0 {
        return Err(bad("n_seeds", "must be positive"));
    }
    cfg.validate()?;
    Ok(RunConfig { solve: cfg, study })
}

/// Read `path`, or use the defaults when no file is given.
pub fn load(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => parse_config(""),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text)
        }
    }
}
