//! Run configuration: a flat `key=value` file merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use refund_core::oracle::SimConfig;
use refund_core::ModelParams;
use serde::Serialize;

/// Keys accepted in a config file. Underscores and dashes are interchangeable.
pub const KEYS: &[&str] = &[
    "v",
    "k",
    "lambda",
    "lambda-post",
    "rho",
    "mu0",
    "grid",
    "badnews",
    "postpurchase-limit",
    "seed",
    "dt",
    "paths",
    "grid-n",
    "price",
    "beta",
    "format",
    "out",
    "check",
];

/// A bad flag, file or parameter. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Evenly spaced grid written `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("grid '{s}' is not lo:hi:n"));
        };
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| format!("grid lower bound '{lo}' is not a number"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| format!("grid upper bound '{hi}' is not a number"))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("grid size '{n}' is not a count"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("grid '{s}' needs finite lo <= hi"));
        }
        if n == 0 || (n == 1 && lo != hi) {
            return Err(format!("grid '{s}' needs n >= 2 (or n = 1 with lo = hi)"));
        }
        Ok(Grid { lo, hi, n })
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        refund_core::numeric::linspace(self.lo, self.hi, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("format '{other}' is not json or csv")),
        }
    }
}

/// Raw settings from the command line, all optional.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub values: BTreeMap<String, String>,
}

impl Overrides {
    pub fn set<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.values.insert(key.to_string(), "true".into());
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(
    text: &str,
    origin: &str,
) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(format!(
                "{origin}:{}: expected key=value, got '{line}'",
                i + 1
            )));
        };
        let key = normalize(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(config_err(format!(
                "{origin}:{}: unknown key '{key}'",
                i + 1
            )));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(config_err(format!(
                "{origin}:{}: duplicate key '{key}'",
                i + 1
            )));
        }
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text, &path.display().to_string())
}

/// Fully resolved settings. Serialized into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub v: f64,
    pub k: f64,
    pub lambda: f64,
    pub lambda_post: f64,
    pub rho: f64,
    pub mu0: f64,
    pub grid: Option<Grid>,
    pub badnews: bool,
    pub postpurchase_limit: bool,
    pub seed: u64,
    pub dt: f64,
    pub paths: usize,
    pub grid_n: usize,
    pub price: Option<f64>,
    pub beta: Option<f64>,
    pub format: Option<Format>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub check: bool,
}

struct Source {
    merged: BTreeMap<String, String>,
}

impl Source {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.merged.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .trim()
                .parse::<T>()
                .map(Some)
                .map_err(|e| config_err(format!("{key}: cannot parse '{raw}': {e}"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

impl RunConfig {
    /// Merges file values under command-line values and fills defaults.
    pub fn resolve(
        command: &str,
        file: BTreeMap<String, String>,
        cli: Overrides,
    ) -> Result<Self, ConfigError> {
        let mut merged = file;
        merged.extend(cli.values);
        let src = Source { merged };
        let lambda: f64 = src.or("lambda", 1.0)?;
        let lambda_post: f64 = src.or("lambda-post", lambda)?;
        // One ten-thousandth of the mean time to news at the faster rate.
        let default_dt = SimConfig::default().dt / lambda.max(lambda_post);
        let cfg = RunConfig {
            command: command.to_string(),
            v: src.or("v", 1.0)?,
            k: src.or("k", 0.1)?,
            lambda,
            lambda_post,
            rho: src.or("rho", lambda)?,
            mu0: src.or("mu0", 0.5)?,
            grid: src.get("grid")?,
            badnews: src.or("badnews", false)?,
            postpurchase_limit: src.or("postpurchase-limit", false)?,
            seed: src.or("seed", 0)?,
            dt: src.or("dt", default_dt)?,
            paths: src.or("paths", SimConfig::default().n_paths)?,
            grid_n: src.or("grid-n", SimConfig::default().grid_n)?,
            price: src.get("price")?,
            beta: src.get("beta")?,
            format: src.get("format")?,
            out: src.get::<String>("out")?.map(PathBuf::from),
            check: src.or("check", false)?,
        };
        cfg.params()?;
        if !(cfg.mu0 > 0.0 && cfg.mu0 < 1.0) {
            return Err(config_err(format!(
                "0 < mu0 < 1 violated: mu0 = {}",
                cfg.mu0
            )));
        }
        if cfg.badnews && cfg.postpurchase_limit {
            return Err(config_err(
                "badnews and postpurchase-limit are mutually exclusive",
            ));
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let p = ModelParams::new(self.v, self.k, self.lambda)
            .and_then(|p| p.with_lambda_post(self.lambda_post))
            .and_then(|p| p.with_rho(self.rho))
            .map_err(|e| config_err(e.to_string()))?;
        if self.badnews {
            p.validate_bad_news()
                .map_err(|e| config_err(e.to_string()))?;
        }
        Ok(p)
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            n_paths: self.paths,
            seed: self.seed,
            grid_n: self.grid_n,
        }
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    /// Rejects settings the current command would silently ignore.
    pub fn reject(&self, what: &[(&str, bool)]) -> Result<(), ConfigError> {
        for (name, set) in what {
            if *set {
                return Err(config_err(format!(
                    "{name} does not apply to '{}'",
                    self.command
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.1:0.9:5".parse().unwrap();
        assert_eq!(
            g,
            Grid {
                lo: 0.1,
                hi: 0.9,
                n: 5
            }
        );
        assert!("0.1:0.9".parse::<Grid>().is_err());
        assert!("0.9:0.1:5".parse::<Grid>().is_err());
        assert!("0.1:0.9:1".parse::<Grid>().is_err());
    }

    #[test]
    fn file_parsing() {
        let text = "# model\nv = 2\nlambda_post=3 # faster\n\nmu0=0.4\n";
        let m = parse_config_text(text, "t").unwrap();
        assert_eq!(m["v"], "2");
        assert_eq!(m["lambda-post"], "3");
        assert!(parse_config_text("bogus=1", "t").is_err());
        assert!(parse_config_text("v=1\nv=2", "t").is_err());
        assert!(parse_config_text("v", "t").is_err());
    }

    #[test]
    fn cli_overrides_file() {
        let file = parse_config_text("k=0.05\nmu0=0.3", "t").unwrap();
        let mut cli = Overrides::default();
        cli.set("mu0", Some(0.6));
        let cfg = RunConfig::resolve("solve", file, cli).unwrap();
        assert_eq!((cfg.k, cfg.mu0, cfg.lambda_post), (0.05, 0.6, 1.0));
        assert_eq!(cfg.dt, 1e-4);
    }

    #[test]
    fn default_step_scales_with_rate() {
        let mut cli = Overrides::default();
        cli.set("lambda", Some(2.0));
        cli.set("lambda-post", Some(8.0));
        let cfg = RunConfig::resolve("simulate", BTreeMap::new(), cli).unwrap();
        assert_eq!(cfg.dt, 1e-4 / 8.0);
    }

    #[test]
    fn invalid_params_name_the_inequality() {
        let mut cli = Overrides::default();
        cli.set("k", Some(0.3));
        let err = RunConfig::resolve("solve", BTreeMap::new(), cli).unwrap_err();
        assert!(err.0.contains("4k < lambda*v"), "{err}");
    }
}
