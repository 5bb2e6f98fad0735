//! Experiment configuration: defaults, a JSON config file, then flags.

use std::path::{Path, PathBuf};

use hypzero::zeros::Method;
use hypzero::Complex64;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const DEFAULT_SEED: u64 = 0x5EED_0000;
pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_EPS_REL: f64 = 1e-6;
pub const DEFAULT_EPS_X: f64 = 1e-3;
pub const THREADS_ENV: &str = "HYPZERO_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    #[default]
    Winding,
    Roots,
}

impl From<CountMethod> for Method {
    fn from(m: CountMethod) -> Self {
        match m {
            CountMethod::Winding => Method::Winding,
            CountMethod::Roots => Method::Roots,
        }
    }
}

/// `r`-grid as written: an explicit list, or `a:b:n` with `1 − r` geometric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RGrid {
    List(Vec<f64>),
    Spec(String),
}

impl RGrid {
    pub fn values(&self) -> Result<Vec<f64>, HarnessError> {
        match self {
            Self::List(v) => Ok(v.clone()),
            Self::Spec(s) => parse_r_grid(s),
        }
    }
}

/// `a:b:n` gives `n` radii from `a` to `b` with `1 − r` in geometric
/// progression; a comma-separated list is taken as is.
pub fn parse_r_grid(s: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Usage(format!("bad r-grid '{s}': expected a:b:n or r1,r2,..."));
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, n] => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 || !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) {
                return Err(bad());
            }
            if n == 1 {
                vec![a]
            } else {
                let (la, lb) = ((1.0 - a).ln(), (1.0 - b).ln());
                (0..n)
                    .map(|k| 1.0 - (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        }
        [_] => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
        _ => return Err(bad()),
    };
    Ok(grid)
}

/// `a:b:step` as an inclusive arithmetic grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Usage(format!("bad range '{s}': expected a:b:step"));
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [a, b, step] = v.as_slice() else {
        return Err(bad());
    };
    if !(*step > 0.0) || b < a {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

/// `re,im`.
pub fn parse_center(s: &str) -> Result<[f64; 2], HarnessError> {
    let bad = || HarnessError::Usage(format!("bad center '{s}': expected re,im"));
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [re, im] => Ok([*re, *im]),
        _ => Err(bad()),
    }
}

/// Any subset of the configuration, as read from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub r_grid: Option<RGrid>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub eps_rel: Option<f64>,
    pub eps_x: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub method: Option<CountMethod>,
    pub alpha_max: Option<usize>,
    pub independent_x: Option<bool>,
}

impl ConfigPatch {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: ConfigPatch) -> ConfigPatch {
        ConfigPatch {
            l: over.l.or(self.l),
            r: over.r.or(self.r),
            r_grid: over.r_grid.or(self.r_grid),
            trials: over.trials.or(self.trials),
            seed: over.seed.or(self.seed),
            eps_rel: over.eps_rel.or(self.eps_rel),
            eps_x: over.eps_x.or(self.eps_x),
            center: over.center.or(self.center),
            out: over.out.or(self.out),
            threads: over.threads.or(self.threads),
            format: over.format.or(self.format),
            method: over.method.or(self.method),
            alpha_max: over.alpha_max.or(self.alpha_max),
            independent_x: over.independent_x.or(self.independent_x),
        }
    }
}

/// A resolved configuration, echoed in every run record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub subcommand: String,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
    pub eps_rel: f64,
    pub eps_x: f64,
    pub center: Option<[f64; 2]>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Format,
    pub method: CountMethod,
    pub alpha_max: usize,
    pub independent_x: bool,
}

impl ExperimentConfig {
    pub fn resolve(subcommand: &str, patch: ConfigPatch) -> Result<Self, HarnessError> {
        let threads = match patch.threads {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => Some(
                    v.trim()
                        .parse()
                        .map_err(|_| HarnessError::Usage(format!("{THREADS_ENV}='{v}' is not a thread count")))?,
                ),
                Err(_) => None,
            },
        };
        let r_grid = patch.r_grid.map(|g| g.values()).transpose()?;
        Ok(Self {
            subcommand: subcommand.to_string(),
            l: patch.l,
            r: patch.r,
            r_grid,
            trials: patch.trials.unwrap_or(DEFAULT_TRIALS),
            seed: patch.seed.unwrap_or(DEFAULT_SEED),
            eps_rel: patch.eps_rel.unwrap_or(DEFAULT_EPS_REL),
            eps_x: patch.eps_x.unwrap_or(DEFAULT_EPS_X),
            center: patch.center,
            out: patch.out,
            threads,
            format: patch.format.unwrap_or_default(),
            method: patch.method.unwrap_or_default(),
            alpha_max: patch.alpha_max.unwrap_or(hypzero::moments::DEFAULT_ALPHA_MAX),
            independent_x: patch.independent_x.unwrap_or(false),
        })
    }

    pub fn require_l(&self) -> Result<f64, HarnessError> {
        self.l.ok_or_else(|| HarnessError::Usage("--L is required".into()))
    }

    pub fn require_r(&self) -> Result<f64, HarnessError> {
        self.r.ok_or_else(|| HarnessError::Usage("--r is required".into()))
    }

    /// `--r-grid` if given, else the single `--r`.
    pub fn radii(&self) -> Result<Vec<f64>, HarnessError> {
        match (&self.r_grid, self.r) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(r)) => Ok(vec![r]),
            (None, None) => Err(HarnessError::Usage("--r or --r-grid is required".into())),
        }
    }

    pub fn center(&self) -> Complex64 {
        self.center.map_or(Complex64::new(0.0, 0.0), |[re, im]| Complex64::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_r_grid() {
        let g = parse_r_grid("0.9:0.999:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[0] - 0.9).abs() < 1e-15);
        assert!((g[1] - 0.99).abs() < 1e-12);
        assert!((g[2] - 0.999).abs() < 1e-12);
        assert_eq!(parse_r_grid("0.9, 0.97,0.995").unwrap(), vec![0.9, 0.97, 0.995]);
        assert!(parse_r_grid("0.9:1.5:3").is_err());
        assert!(parse_r_grid("a:b").is_err());
    }

    #[test]
    fn ranges_and_centers() {
        let x = parse_range("-1:1:0.5").unwrap();
        assert_eq!(x, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(parse_center("0.4,0.3").unwrap(), [0.4, 0.3]);
        assert!(parse_center("0.4").is_err());
        assert!(parse_range("1:0:0.1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigPatch = serde_json::from_str(r#"{"L": 0.5, "r": 0.9, "trials": 10, "r_grid": "0.9:0.99:2"}"#).unwrap();
        let flags = ConfigPatch {
            trials: Some(20),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve("simulate", file.overlay(flags)).unwrap();
        assert_eq!(cfg.l, Some(0.5));
        assert_eq!(cfg.trials, 20);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.r_grid.as_ref().unwrap().len(), 2);
        assert!(serde_json::from_str::<ConfigPatch>(r#"{"bogus": 1}"#).is_err());
    }
}
