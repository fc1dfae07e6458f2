//! Flat `key = value` run configurations.
//!
//! One entry per line, `#` starts a comment, nested specs use dotted keys
//! (`system.kind = expanding`). Unknown and duplicate keys are rejected so a
//! typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use thermolab::systems::{make_expanding_circle, make_torus_endomorphism, Potential, SmoothSystem, TrigPolynomial};
use thermolab::{ConstraintSet, Interval};

use crate::error::CliError;

/// Every key a configuration may contain.
pub const KNOWN_KEYS: &[&str] = &[
    "system.kind",
    "system.k",
    "system.eps",
    "system.matrix",
    "potential.kind",
    "potential.c",
    "potential.terms",
    "potential.t",
    "n_min",
    "n_max",
    "samples",
    "seed",
    "basis.k",
    "bins",
    "concentration.radius",
    "ldp.observables",
    "ldp.region",
    "ldp.min_count",
    "rate.alpha",
    "rate.beta",
    "rate.cap",
    "oracle.grid",
    "selfcheck.points",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |why: &str| CliError::Config(format!("line {}: {why}: '{}'", i + 1, raw.trim()));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(bad("empty key or value"));
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(bad(&format!("unknown key '{key}'")));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(bad(&format!("duplicate key '{key}'")));
            }
        }
        Ok(Self { entries })
    }
}

impl RunConfig {
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse().map_err(|e| CliError::Config(format!("field '{key}': cannot parse '{v}': {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| CliError::Config(format!("missing required field '{key}'")))
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.require("seed")
    }

    /// `system.kind = expanding` (`system.k`, `system.eps`) or
    /// `system.kind = torus` (`system.matrix = a b c d`, row-major).
    pub fn system(&self) -> Result<SmoothSystem, CliError> {
        let kind: String = self.require("system.kind")?;
        match kind.as_str() {
            "expanding" => {
                let k: u32 = self.require("system.k")?;
                let eps: f64 = self.or("system.eps", 0.0)?;
                Ok(make_expanding_circle(k, eps)?)
            }
            "torus" => {
                let text: String = self.require("system.matrix")?;
                let v = parse_list::<i64>("system.matrix", &text, |c| c == ',' || c.is_whitespace())?;
                if v.len() != 4 {
                    return Err(CliError::Config(format!("field 'system.matrix': expected 4 integers, got {}", v.len())));
                }
                Ok(make_torus_endomorphism([[v[0], v[1]], [v[2], v[3]]])?)
            }
            other => Err(CliError::Config(format!("field 'system.kind': unknown kind '{other}' (expanding | torus)"))),
        }
    }

    /// `potential.kind = zero | constant | trig | geometric`; defaults to zero.
    pub fn potential(&self, system: &SmoothSystem) -> Result<Potential, CliError> {
        let kind: String = self.or("potential.kind", "zero".to_string())?;
        let pot = match kind.as_str() {
            "zero" => Potential::zero(),
            "constant" => Potential::constant(self.require("potential.c")?)?,
            "trig" => {
                let text: String = self.require("potential.terms")?;
                Potential::Trig(TrigPolynomial::parse(system.dim(), &text)?)
            }
            "geometric" => Potential::geometric(self.require("potential.t")?, system)?,
            other => {
                return Err(CliError::Config(format!(
                    "field 'potential.kind': unknown kind '{other}' (zero | constant | trig | geometric)"
                )))
            }
        };
        thermolab::systems::check_compatible(system, &pot)?;
        Ok(pot)
    }

    /// `n_min ..= n_max`; `n_min` defaults to `n_max / 2`.
    pub fn n_values(&self) -> Result<Vec<usize>, CliError> {
        let n_max: usize = self.require("n_max")?;
        let n_min: usize = self.or("n_min", (n_max / 2).max(1))?;
        if n_min == 0 || n_min > n_max {
            return Err(CliError::Config(format!("fields 'n_min'/'n_max': need 1 <= n_min <= n_max, got {n_min}..{n_max}")));
        }
        Ok((n_min..=n_max).collect())
    }

    /// `ldp.observables = 1, 2` (1-based basis indices).
    pub fn observables(&self) -> Result<Vec<usize>, CliError> {
        let text: String = self.require("ldp.observables")?;
        let obs = parse_list::<usize>("ldp.observables", &text, |c| c == ',')?;
        if obs.is_empty() || obs.len() > 2 || obs.contains(&0) {
            return Err(CliError::Config("field 'ldp.observables': need one or two indices, each >= 1".into()));
        }
        Ok(obs)
    }

    /// `ldp.region = lo:hi; lo:hi`, one interval per observable; `empty`
    /// denotes the empty interval and `inf` is accepted as an endpoint.
    pub fn constraint(&self, observables: &[usize]) -> Result<ConstraintSet, CliError> {
        let text: String = self.require("ldp.region")?;
        let region = text
            .split(';')
            .map(str::trim)
            .map(|part| {
                if part == "empty" {
                    return Ok(Interval::empty());
                }
                let r = parse_range("ldp.region", part)?;
                if r.len() != 2 {
                    return Err(CliError::Config(format!("field 'ldp.region': expected lo:hi, got '{part}'")));
                }
                Ok(Interval::new(r[0], r[1])?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        if region.len() != observables.len() {
            return Err(CliError::Config(format!(
                "field 'ldp.region': {} intervals for {} observables",
                region.len(),
                observables.len()
            )));
        }
        Ok(ConstraintSet::new(observables.to_vec(), region)?)
    }

    /// A `lo:hi:step` grid axis, used for every coordinate.
    pub fn axis(&self, key: &str, default: [f64; 3]) -> Result<Vec<f64>, CliError> {
        let [lo, hi, step] = match self.raw(key) {
            None => default,
            Some(text) => {
                let r = parse_range(key, text)?;
                if r.len() != 3 {
                    return Err(CliError::Config(format!("field '{key}': expected lo:hi:step, got '{text}'")));
                }
                [r[0], r[1], r[2]]
            }
        };
        if !lo.is_finite() || !hi.is_finite() || lo >= hi || step.is_nan() || step <= 0.0 {
            return Err(CliError::Config(format!("field '{key}': need lo < hi and step > 0")));
        }
        Ok(thermolab::stats::grid(lo, hi, step))
    }
}

fn parse_list<T: FromStr>(key: &str, text: &str, sep: impl Fn(char) -> bool) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    text.split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| CliError::Config(format!("field '{key}': cannot parse '{s}': {e}"))))
        .collect()
}

fn parse_range(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    parse_list(key, text, |c| c == ':')
}
