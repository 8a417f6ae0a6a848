//! Run configuration: flat key=value text with dotted section prefixes.
//!
//! ```text
//! seed=42
//! alpha=0.01
//! tests=mvn,exact,relaxed
//! out_dir=out
//! target_fail=0.5
//! calib_trials=600
//! max_sessions=400000
//! code=builtin            # builtin | builtin-reduced | <path to alist>
//! prior.beta=8
//! prior.k=1
//! prior.theta=0
//! dataset.1.n_if=400
//! dataset.1.m=0
//! dataset.1.n=2000
//! dataset.1.sigma2=0.13183   # optional; omitted -> calibrated
//! ```

use crate::error::{Error, Result};
use crate::phy::LdpcCode;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSelection {
    Mvn,
    Exact,
    Relaxed,
}

impl TestSelection {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mvn" => Ok(TestSelection::Mvn),
            "exact" => Ok(TestSelection::Exact),
            "relaxed" => Ok(TestSelection::Relaxed),
            other => Err(Error::Config(format!(
                "unknown test {other:?} (expected mvn, exact or relaxed)"
            ))),
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Self::parse)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeChoice {
    Builtin,
    BuiltinReduced,
    Path(PathBuf),
}

impl CodeChoice {
    pub fn parse(s: &str) -> Self {
        match s {
            "builtin" => CodeChoice::Builtin,
            "builtin-reduced" => CodeChoice::BuiltinReduced,
            path => CodeChoice::Path(PathBuf::from(path)),
        }
    }

    pub fn load(&self) -> Result<LdpcCode> {
        match self {
            CodeChoice::Builtin => Ok(LdpcCode::paper_default()),
            CodeChoice::BuiltinReduced => Ok(LdpcCode::reduced_profile()),
            CodeChoice::Path(p) => LdpcCode::from_alist(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDataset {
    pub n_if: usize,
    pub m: usize,
    pub n: usize,
    /// Noise power; omitted means calibrate to `target_fail`.
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: f64,
    pub tests: Vec<TestSelection>,
    pub out_dir: Option<PathBuf>,
    pub target_fail: f64,
    pub calib_trials: usize,
    pub max_sessions: usize,
    pub code: CodeChoice,
    pub prior_beta: f64,
    pub prior_k: f64,
    pub prior_theta: f64,
    pub datasets: Vec<ConfigDataset>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            alpha: 0.01,
            tests: vec![
                TestSelection::Mvn,
                TestSelection::Exact,
                TestSelection::Relaxed,
            ],
            out_dir: None,
            target_fail: 0.5,
            calib_trials: 600,
            max_sessions: 400_000,
            code: CodeChoice::Builtin,
            prior_beta: 8.0,
            prior_k: 1.0,
            prior_theta: 0.0,
            datasets: Vec::new(),
        }
    }
}

pub fn parse_config(text: &str, label: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut dataset_keys: BTreeMap<usize, BTreeMap<String, (usize, String)>> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: label.to_string(),
            line: lineno + 1,
            message: "expected key=value".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| Error::Parse {
            path: label.to_string(),
            line: lineno + 1,
            message: format!("bad {what} value {value:?}"),
        };
        match key {
            "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
            "alpha" => cfg.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "tests" => cfg.tests = TestSelection::parse_list(value)?,
            "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
            "target_fail" => cfg.target_fail = value.parse().map_err(|_| bad("target_fail"))?,
            "calib_trials" => cfg.calib_trials = value.parse().map_err(|_| bad("calib_trials"))?,
            "max_sessions" => cfg.max_sessions = value.parse().map_err(|_| bad("max_sessions"))?,
            "code" => cfg.code = CodeChoice::parse(value),
            "prior.beta" => cfg.prior_beta = value.parse().map_err(|_| bad("prior.beta"))?,
            "prior.k" => cfg.prior_k = value.parse().map_err(|_| bad("prior.k"))?,
            "prior.theta" => cfg.prior_theta = value.parse().map_err(|_| bad("prior.theta"))?,
            _ => {
                if let Some(rest) = key.strip_prefix("dataset.") {
                    let (idx, field) = rest.split_once('.').ok_or_else(|| Error::Parse {
                        path: label.to_string(),
                        line: lineno + 1,
                        message: format!("expected dataset.<index>.<field>, got {key:?}"),
                    })?;
                    let idx: usize = idx.parse().map_err(|_| Error::Parse {
                        path: label.to_string(),
                        line: lineno + 1,
                        message: format!("bad dataset index in {key:?}"),
                    })?;
                    dataset_keys
                        .entry(idx)
                        .or_default()
                        .insert(field.to_string(), (lineno + 1, value.to_string()));
                } else {
                    return Err(Error::Parse {
                        path: label.to_string(),
                        line: lineno + 1,
                        message: format!("unknown configuration key {key:?}"),
                    });
                }
            }
        }
    }

    for (idx, fields) in dataset_keys {
        let get = |name: &str| -> Result<&(usize, String)> {
            fields.get(name).ok_or_else(|| Error::Config(format!(
                "{label}: dataset.{idx} is missing field {name:?}"
            )))
        };
        let parse_usize = |name: &str| -> Result<usize> {
            let (line, v) = get(name)?;
            v.parse().map_err(|_| Error::Parse {
                path: label.to_string(),
                line: *line,
                message: format!("bad dataset.{idx}.{name} value {v:?}"),
            })
        };
        let sigma2 = match fields.get("sigma2") {
            Some((line, v)) => Some(v.parse().map_err(|_| Error::Parse {
                path: label.to_string(),
                line: *line,
                message: format!("bad dataset.{idx}.sigma2 value {v:?}"),
            })?),
            None => None,
        };
        for field in fields.keys() {
            if !["n_if", "m", "n", "sigma2"].contains(&field.as_str()) {
                return Err(Error::Config(format!(
                    "{label}: dataset.{idx} has unknown field {field:?}"
                )));
            }
        }
        cfg.datasets.push(ConfigDataset {
            n_if: parse_usize("n_if")?,
            m: parse_usize("m")?,
            n: parse_usize("n")?,
            sigma2,
        });
    }

    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &RunConfig) -> Result<()> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0,1), got {}", cfg.alpha)));
    }
    if !(cfg.target_fail > 0.0 && cfg.target_fail < 1.0) {
        return Err(Error::Config(format!(
            "target_fail must lie in (0,1), got {}",
            cfg.target_fail
        )));
    }
    if !(cfg.prior_beta > 0.0) {
        return Err(Error::Config("prior.beta must be > 0".into()));
    }
    if !(cfg.prior_k >= 0.0) {
        return Err(Error::Config("prior.k must be >= 0".into()));
    }
    if !(cfg.prior_theta > -std::f64::consts::PI && cfg.prior_theta <= std::f64::consts::PI) {
        return Err(Error::Config("prior.theta must lie in (-pi, pi]".into()));
    }
    for (i, ds) in cfg.datasets.iter().enumerate() {
        if ds.n == 0 || ds.n_if == 0 {
            return Err(Error::Config(format!(
                "dataset {} must have n >= 1 and n_if >= 1",
                i + 1
            )));
        }
        if let Some(s2) = ds.sigma2 {
            if !(s2 > 0.0) {
                return Err(Error::Config(format!(
                    "dataset {}: sigma2 must be > 0",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
seed=42
alpha=0.05
tests=mvn,exact
out_dir=results
target_fail=0.5
prior.beta=8
prior.k=1
prior.theta=0
# comment line
dataset.1.n_if=400
dataset.1.m=0
dataset.1.n=2000
dataset.1.sigma2=0.13183
dataset.2.n_if=1
dataset.2.m=0
dataset.2.n=1000
";
        let cfg = parse_config(text, "mem").unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.tests, vec![TestSelection::Mvn, TestSelection::Exact]);
        assert_eq!(cfg.out_dir.as_deref(), Some(Path::new("results")));
        assert_eq!(cfg.datasets.len(), 2);
        assert_eq!(cfg.datasets[0].sigma2, Some(0.13183));
        assert_eq!(cfg.datasets[1].sigma2, None);
        assert_eq!(cfg.datasets[1].n_if, 1);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse_config("alpha=2.0", "mem").is_err());
        assert!(parse_config("nonsense=1", "mem").is_err());
        assert!(parse_config("dataset.1.n_if=0\ndataset.1.m=0\ndataset.1.n=5", "mem").is_err());
        assert!(parse_config("dataset.1.bogus=1", "mem").is_err());
        assert!(parse_config("tests=mvn,bogus", "mem").is_err());
    }

    #[test]
    fn code_choice_parse() {
        assert_eq!(CodeChoice::parse("builtin"), CodeChoice::Builtin);
        assert_eq!(CodeChoice::parse("builtin-reduced"), CodeChoice::BuiltinReduced);
        assert_eq!(
            CodeChoice::parse("codes/x.alist"),
            CodeChoice::Path(PathBuf::from("codes/x.alist"))
        );
    }
}
