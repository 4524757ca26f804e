//! JSON configuration and flag/config merging.
//!
//! A configuration file is a flat JSON object whose keys are the long flag
//! names with `-` replaced by `_` (`--bin-width` is `bin_width`). A run
//! manifest is accepted as well, in which case its `config` member is used.
//! Flags given on the command line win over the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub fn load(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io("config", path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::input("config", format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::input("config", format!("{}: expected a JSON object", path.display())));
    };
    if map.contains_key("manifest_version") {
        match map.remove("config") {
            Some(Value::Object(inner)) => map = inner,
            _ => return Err(CliError::input("config", format!("{}: manifest has no config", path.display()))),
        }
    }
    Ok(map)
}

/// Overlays the non-empty fields of `flags` on `config` and reads back the result.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: &Map<String, Value>) -> CliResult<T> {
    let mut merged = config.clone();
    let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::input("config", e))? else {
        unreachable!("argument structs serialize to objects");
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::input("config", e))
}

pub fn is_false(b: &bool) -> bool {
    !*b
}

/// Accepts either a single path or a list of paths.
pub fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PathBuf>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        One(PathBuf),
        Many(Vec<PathBuf>),
    }
    Ok(match Option::<Either>::deserialize(d)? {
        None => Vec::new(),
        Some(Either::One(p)) => vec![p],
        Some(Either::Many(v)) => v,
    })
}

/// A closed interval written `lo:hi` on the command line or `[lo, hi]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
        let lo = lo.trim().parse::<f64>().map_err(|_| format!("invalid bound `{lo}`"))?;
        let hi = hi.trim().parse::<f64>().map_err(|_| format!("invalid bound `{hi}`"))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("need finite lo < hi, got {lo}:{hi}"));
        }
        Ok(Span { lo, hi })
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Pair([f64; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Pair([lo, hi]) => format!("{lo}:{hi}").parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Evaluation grid `lo:hi:steps` (`steps` points including both ends).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self, log: bool) -> Result<Vec<f64>, String> {
        if log && self.lo <= 0.0 {
            return Err(format!("log grid needs lo > 0, got {}", self.lo));
        }
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                let f = i as f64 / last;
                if i + 1 == self.steps {
                    self.hi
                } else if log {
                    (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + f * (self.hi - self.lo)
                }
            })
            .collect())
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (span, steps) = s.rsplit_once(':').ok_or_else(|| format!("expected lo:hi:steps, got `{s}`"))?;
        let span: Span = span.parse()?;
        let steps = steps.trim().parse::<usize>().map_err(|_| format!("invalid step count `{steps}`"))?;
        if steps < 2 {
            return Err(format!("need at least 2 grid points, got {steps}"));
        }
        Ok(Grid {
            lo: span.lo,
            hi: span.hi,
            steps,
        })
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        format!("{}:{}:{}", self.lo, self.hi, self.steps).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
