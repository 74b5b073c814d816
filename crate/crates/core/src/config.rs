//! Experiment configuration: `key = value` files, flag overrides and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dilation::{ehrenfest_time, EhrenfestKind};
use crate::error::{Error, Result};

/// Keys accepted in config files; identical to the long flag names.
pub const KEYS: &[&str] = &[
    "hbar",
    "model",
    "t",
    "t-ehrenfest",
    "grid-n",
    "grid-l",
    "dt",
    "seed",
    "out",
    "samples",
    "q0",
    "p0",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelId {
    Dilation,
    Harmonic,
    DoubleWell,
}

impl FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dilation" => Ok(ModelId::Dilation),
            "harmonic" => Ok(ModelId::Harmonic),
            "doublewell" => Ok(ModelId::DoubleWell),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected dilation|harmonic|doublewell)"
            ))),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::Dilation => "dilation",
            ModelId::Harmonic => "harmonic",
            ModelId::DoubleWell => "doublewell",
        })
    }
}

/// Snapshot times, either absolute or in units of `ln(1/ℏ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Absolute(Vec<f64>),
    Ehrenfest(Vec<f64>),
}

impl Schedule {
    /// Absolute times for a given ℏ.
    pub fn resolve(&self, hbar: f64) -> Result<Vec<f64>> {
        match self {
            Schedule::Absolute(ts) => Ok(ts.clone()),
            Schedule::Ehrenfest(ks) => {
                let unit = ehrenfest_time(hbar, EhrenfestKind::Full)?;
                Ok(ks.iter().map(|k| k * unit).collect())
            }
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Schedule::Absolute(v) | Schedule::Ehrenfest(v) => v,
        }
    }
}

/// Raw `key → values` settings, before validation. Later sources replace
/// earlier ones key by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    entries: BTreeMap<String, Vec<String>>,
}

impl Settings {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored,
    /// a key may repeat, and values may be comma-separated lists.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Settings::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            let values = out.entries.entry(key).or_default();
            values.extend(
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(String::from),
            );
        }
        Ok(out)
    }

    /// Replaces every value of `key` (no-op for an empty list).
    pub fn set<I, V>(&mut self, key: &str, values: I)
    where
        I: IntoIterator<Item = V>,
        V: ToString,
    {
        let values: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
        if !values.is_empty() {
            self.entries.insert(key.to_string(), values);
        }
    }

    pub fn clear(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    fn single<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some([v]) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))),
            Some(vs) => Err(Error::Config(format!("{key}: expected one value, got {}", vs.len()))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|vs| {
                vs.iter()
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Validated settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Option<ModelId>,
    pub hbars: Vec<f64>,
    pub schedule: Option<Schedule>,
    pub grid_n: Option<usize>,
    pub grid_l: Option<f64>,
    pub dt: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub samples: Option<usize>,
    pub q0: f64,
    pub p0: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: None,
            hbars: Vec::new(),
            schedule: None,
            grid_n: None,
            grid_l: None,
            dt: None,
            seed: 0,
            out: None,
            samples: None,
            q0: 0.0,
            p0: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let schedule = match (s.list("t")?, s.list("t-ehrenfest")?) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either t or t-ehrenfest, not both".into()))
            }
            (Some(ts), None) => Some(Schedule::Absolute(ts)),
            (None, Some(ks)) => Some(Schedule::Ehrenfest(ks)),
            (None, None) => None,
        };
        let cfg = Self {
            model: s.single::<String>("model")?.map(|m| m.parse()).transpose()?,
            hbars: s.list("hbar")?.unwrap_or_default(),
            schedule,
            grid_n: s.single("grid-n")?,
            grid_l: s.single("grid-l")?,
            dt: s.single("dt")?,
            seed: s.single("seed")?.unwrap_or(0),
            out: s.single::<String>("out")?.map(PathBuf::from),
            samples: s.single("samples")?,
            q0: s.single("q0")?.unwrap_or(0.0),
            p0: s.single("p0")?.unwrap_or(0.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the invariants that do not depend on the experiment kind.
    pub fn validate(&self) -> Result<()> {
        for &h in &self.hbars {
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::InvalidHbar(h));
            }
        }
        if let Some(s) = &self.schedule {
            let v = s.values();
            if v.is_empty() {
                return Err(Error::Config("time schedule is empty".into()));
            }
            if v.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(Error::Config("schedule entries must be finite and >= 0".into()));
            }
            if v.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Config("time schedule must be ascending".into()));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt = {dt} must be > 0")));
            }
        }
        if self.samples == Some(0) {
            return Err(Error::Config("samples must be >= 1".into()));
        }
        Ok(())
    }

    /// Fails unless the configured model (when given) is one of `allowed`.
    pub fn expect_model(&self, allowed: &[ModelId], default: ModelId) -> Result<ModelId> {
        let m = self.model.unwrap_or(default);
        if allowed.contains(&m) {
            Ok(m)
        } else {
            Err(Error::Config(format!(
                "model '{m}' is not valid here (expected one of {})",
                allowed.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ")
            )))
        }
    }

    /// `key = value` lines describing the resolved run, in a fixed order.
    pub fn echo(&self, command: &str) -> String {
        let mut out = format!("command = {command}\n");
        if let Some(m) = self.model {
            out.push_str(&format!("model = {m}\n"));
        }
        for h in &self.hbars {
            out.push_str(&format!("hbar = {h:e}\n"));
        }
        match &self.schedule {
            Some(Schedule::Absolute(ts)) => ts.iter().for_each(|t| out.push_str(&format!("t = {t:e}\n"))),
            Some(Schedule::Ehrenfest(ks)) => {
                ks.iter().for_each(|k| out.push_str(&format!("t-ehrenfest = {k:e}\n")))
            }
            None => {}
        }
        if let Some(n) = self.grid_n {
            out.push_str(&format!("grid-n = {n}\n"));
        }
        if let Some(l) = self.grid_l {
            out.push_str(&format!("grid-l = {l:e}\n"));
        }
        if let Some(dt) = self.dt {
            out.push_str(&format!("dt = {dt:e}\n"));
        }
        if let Some(n) = self.samples {
            out.push_str(&format!("samples = {n}\n"));
        }
        out.push_str(&format!("q0 = {:e}\np0 = {:e}\nseed = {}\n", self.q0, self.p0, self.seed));
        out
    }
}
