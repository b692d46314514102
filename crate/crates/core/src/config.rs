//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Environment variable read for the worker count when the config leaves it unset.
pub const WORKERS_ENV: &str = "BEC_SWEEP_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(param: &str, start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("grid.count must be at least 1".into()));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if spacing == Spacing::Log && (start <= 0.0 || stop <= 0.0) {
            return Err(Error::Config("log spacing needs positive bounds".into()));
        }
        Ok(Grid { param: param.to_string(), start, stop, count, spacing })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + s * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Every recognised key with its default. Keys not listed here are rejected.
const DEFAULTS: &[(&str, &str)] = &[
    ("n", "3"),
    ("q", "0"),
    ("g", "1"),
    ("beta", "1"),
    ("lambda", ""),
    ("tau", "0"),
    ("eps", "0"),
    ("channels", "2"),
    ("grid.param", ""),
    ("grid.start", ""),
    ("grid.stop", ""),
    ("grid.count", ""),
    ("grid.spacing", "linear"),
    ("window", "1000"),
    ("dt", "1e-4"),
    ("resolution", "0.1"),
    ("calibration.lambda", "0.5"),
    ("alpha", "5"),
    ("heatmap.range", "10"),
    ("heatmap.count", "101"),
    ("circulation.steps", "256"),
    ("circulation.n", "4,9,25"),
    ("scan.n", "25,100,400"),
    ("samples", "0"),
    ("seed", "0"),
    ("specs", "50"),
    ("quick", "false"),
    ("output", "out"),
    ("format", "csv"),
    ("workers", ""),
];

/// Parsed configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    pub grid: Option<Grid>,
    pub output: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub workers: Option<usize>,
}

/// Reads `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_assignment(line).map_err(|_| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        out.push((k, v));
    }
    Ok(out)
}

/// Splits a single `key=value` assignment.
pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{s}`")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("empty key in `{s}`")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    // str::parse ignores the locale: decimal point only.
    v.parse::<f64>().map_err(|_| Error::Config(format!("{key}: `{v}` is not a number")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| Error::Config(format!("{key}: `{v}` is not a list of numbers"))))
        .collect()
}

impl RunConfig {
    /// Builds a config from assignments applied in order over the defaults.
    pub fn from_pairs<I>(pairs: I, env_workers: Option<&str>) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut values: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in pairs {
            if !values.contains_key(&k) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            values.insert(k, v);
        }
        let get = |k: &str| values.get(k).map(String::as_str).unwrap_or("");

        let grid = match get("grid.param") {
            "" => None,
            param => {
                let spacing = match get("grid.spacing") {
                    "linear" => Spacing::Linear,
                    "log" => Spacing::Log,
                    s => return Err(Error::Config(format!("grid.spacing: `{s}` is not linear|log"))),
                };
                let count = get("grid.count")
                    .parse::<usize>()
                    .map_err(|_| Error::Config("grid.count must be a non-negative integer".into()))?;
                Some(Grid::new(
                    param,
                    parse_f64("grid.start", get("grid.start"))?,
                    parse_f64("grid.stop", get("grid.stop"))?,
                    count,
                    spacing,
                )?)
            }
        };
        let format = match get("format") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            s => return Err(Error::Config(format!("format: `{s}` is not csv|json"))),
        };
        let seed = get("seed").parse::<u64>().map_err(|_| Error::Config("seed must be an unsigned integer".into()))?;
        let workers = match (get("workers"), env_workers) {
            ("", None) => None,
            ("", Some(e)) => Some(e),
            (w, _) => Some(w),
        }
        .map(|w| match w.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("worker count `{w}` must be a positive integer"))),
        })
        .transpose()?;
        let output = PathBuf::from(get("output"));
        let cfg = RunConfig { values, grid, output, format, seed, workers };
        // Surface malformed numeric keys up front rather than mid-run.
        for k in ["g", "beta", "tau", "window", "dt", "resolution", "calibration.lambda", "alpha", "heatmap.range"] {
            cfg.f64(k)?;
        }
        if !cfg.str("lambda").is_empty() {
            cfg.f64("lambda")?;
        }
        for k in ["n", "channels", "heatmap.count", "circulation.steps", "samples", "specs"] {
            cfg.usize(k)?;
        }
        cfg.list_u32("q")?;
        cfg.list_f64("eps")?;
        cfg.bool("quick")?;
        Ok(cfg)
    }

    /// Loads `path` (if any), then applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        for o in overrides {
            pairs.push(parse_assignment(o)?);
        }
        let env = std::env::var(WORKERS_ENV).ok();
        Self::from_pairs(pairs, env.as_deref())
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.str(key))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.str(key).parse().map_err(|_| Error::Config(format!("{key}: `{}` is not an integer", self.str(key))))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.str(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            s => Err(Error::Config(format!("{key}: `{s}` is not a boolean"))),
        }
    }

    pub fn list_f64(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.str(key))
    }

    pub fn list_u32(&self, key: &str) -> Result<Vec<u32>> {
        parse_list(key, self.str(key))
    }

    /// `g`, with `lambda` (if set) taking precedence as `g = √(λ|β|)`.
    pub fn coupling(&self) -> Result<f64> {
        if self.str("lambda").is_empty() {
            self.f64("g")
        } else {
            Ok((self.f64("lambda")? * self.f64("beta")?.abs()).sqrt())
        }
    }

    /// Grid values, or an error naming the command that needs one.
    pub fn require_grid(&self, what: &str) -> Result<&Grid> {
        self.grid.as_ref().ok_or_else(|| Error::Config(format!("{what} needs a grid (grid.param, grid.start, grid.stop, grid.count)")))
    }

    /// Every key in sorted order, for output metadata. Worker count and output
    /// location are left out so that files do not depend on them.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.values
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "workers" | "output"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &[(&str, &str)]) -> Vec<(String, String)> {
        s.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn grids() {
        let g = Grid::new("x", 1.0, 100.0, 3, Spacing::Log).unwrap();
        let v = g.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(Grid::new("x", 0.0, 1.0, 5, Spacing::Linear).unwrap().values()[4], 1.0);
        assert!(Grid::new("x", 0.0, 1.0, 0, Spacing::Linear).is_err());
        assert!(Grid::new("x", 0.0, 1.0, 4, Spacing::Log).is_err());
    }

    #[test]
    fn overrides_and_env() {
        let c = RunConfig::from_pairs(pairs(&[("n", "5"), ("n", "7"), ("workers", "")]), Some("3")).unwrap();
        assert_eq!(c.usize("n").unwrap(), 7);
        assert_eq!(c.workers, Some(3));
        let c = RunConfig::from_pairs(pairs(&[("workers", "2")]), Some("3")).unwrap();
        assert_eq!(c.workers, Some(2));
        assert!(RunConfig::from_pairs(pairs(&[("bogus", "1")]), None).is_err());
        assert!(RunConfig::from_pairs(pairs(&[("g", "0,5")]), None).is_err());
        assert!(RunConfig::from_pairs(pairs(&[("grid.param", "x"), ("grid.start", "0"), ("grid.stop", "1"), ("grid.count", "0")]), None).is_err());
    }

    #[test]
    fn file_syntax() {
        let p = parse_pairs("# header\nn = 4\n\n eps=0.5, 1 # trailing\n").unwrap();
        assert_eq!(p, pairs(&[("n", "4"), ("eps", "0.5, 1")]));
        assert!(parse_pairs("no equals sign").is_err());
        let c = RunConfig::from_pairs(p, None).unwrap();
        assert_eq!(c.list_f64("eps").unwrap(), vec![0.5, 1.0]);
    }

    #[test]
    fn lambda_sets_coupling() {
        let c = RunConfig::from_pairs(pairs(&[("lambda", "0.3"), ("beta", "-2")]), None).unwrap();
        assert!((c.coupling().unwrap() - 0.6f64.sqrt()).abs() < 1e-15);
    }
}
