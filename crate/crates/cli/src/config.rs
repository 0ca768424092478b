//! Configuration files and their resolution against defaults and flags.
//!
//! Precedence is defaults, then the `--config` file, then command-line flags.
//! The resolved values are what every report echoes back.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;
use yamabe_core::coefficients::{Branch, CoefficientFamily, Nonlinearity};
use yamabe_core::shooting::{CompactProblem, DeSitterImage};
use yamabe_core::singular_ivp::Sign;

/// Failures that map to the usage exit code.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub shoot: ShootSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub family: Option<String>,
    pub f: Option<String>,
    pub sign: Option<String>,
    pub a: Option<f64>,
    pub rmax: Option<f64>,
    pub tol: Option<f64>,
    pub svg: Option<bool>,
}

/// Shared by `shoot` and `glue`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootSection {
    pub ell: Option<u32>,
    pub m: Option<u32>,
    pub n1: Option<u32>,
    pub n2: Option<u32>,
    pub p: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub image: Option<String>,
    pub d: Option<f64>,
    pub rmax: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<String>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })
    }
}

/// Resolved `solve` settings.
#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub family: String,
    pub f: String,
    pub sign: String,
    pub a: f64,
    pub rmax: f64,
    pub tol: f64,
    pub svg: bool,
}

/// Resolved `shoot` and `glue` settings.
#[derive(Debug, Clone, Serialize)]
pub struct ShootConfig {
    pub ell: u32,
    pub m: u32,
    pub n1: u32,
    pub n2: u32,
    pub p: f64,
    pub lambda: f64,
    pub k: usize,
    pub tol: f64,
    pub image: String,
    pub d: Option<f64>,
    pub rmax: f64,
}

/// Resolved `verify` settings.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
}

/// Default relative tolerance of the integrator.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default radial horizon of the hyperbolic pieces.
pub const DEFAULT_OUTER_HORIZON: f64 = 20.0;

/// Takes the flag, else the file value.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn require<T>(v: Option<T>, name: &str, section: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::Invalid(format!("missing required value `{name}` (flag --{name} or [{section}].{name})")))
}

fn numbers(s: &str, what: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| ConfigError::Invalid(format!("bad number {x:?} in {what}"))))
        .collect()
}

/// Parses `power:θ`, `sinh:α,β,plus|minus` or `sin:α,β`.
pub fn parse_family(s: &str) -> Result<CoefficientFamily, ConfigError> {
    let bad = || ConfigError::Invalid(format!("bad family {s:?}; expected power:θ, sinh:α,β,plus|minus or sin:α,β"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let fam = match kind {
        "power" => match numbers(rest, "family")?[..] {
            [theta] => CoefficientFamily::PowerLaw { theta },
            _ => return Err(bad()),
        },
        "sinh" => {
            let (nums, branch) = rest.rsplit_once(',').ok_or_else(bad)?;
            let branch = match branch {
                "plus" => Branch::Plus,
                "minus" => Branch::Minus,
                _ => return Err(bad()),
            };
            match numbers(nums, "family")?[..] {
                [alpha, beta] => CoefficientFamily::SinhRatio { alpha, beta, branch },
                _ => return Err(bad()),
            }
        }
        "sin" => match numbers(rest, "family")?[..] {
            [alpha, beta] => CoefficientFamily::SinRatio { alpha, beta },
            _ => return Err(bad()),
        },
        _ => return Err(bad()),
    };
    fam.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(fam)
}

/// Parses `power:Λ,p`, `pml:Λ,p` or `pdiff:Λ,δ,p,s`.
pub fn parse_nonlinearity(s: &str) -> Result<Nonlinearity, ConfigError> {
    let bad = || ConfigError::Invalid(format!("bad nonlinearity {s:?}; expected power:Λ,p, pml:Λ,p or pdiff:Λ,δ,p,s"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let nl = match (kind, &numbers(rest, "nonlinearity")?[..]) {
        ("power", &[lambda, p]) => Nonlinearity::PurePower { lambda, p },
        ("pml", &[lambda, p]) => Nonlinearity::PowerMinusLinear { lambda, p },
        ("pdiff", &[lambda, delta, p, s]) => Nonlinearity::PowerDifference { lambda, delta, p, s },
        _ => return Err(bad()),
    };
    nl.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(nl)
}

pub fn parse_sign(s: &str) -> Result<Sign, ConfigError> {
    match s {
        "minus" => Ok(Sign::Minus),
        "plus" => Ok(Sign::Plus),
        _ => Err(ConfigError::Invalid(format!("bad sign {s:?}; expected minus or plus"))),
    }
}

pub fn parse_image(s: &str) -> Result<DeSitterImage, ConfigError> {
    match s {
        "line" => Ok(DeSitterImage::Line),
        "from-minus-one" => Ok(DeSitterImage::FromMinusOne),
        "from-one" => Ok(DeSitterImage::FromOne),
        _ => Err(ConfigError::Invalid(format!("bad image {s:?}; expected line, from-minus-one or from-one"))),
    }
}

pub fn positive(v: f64, name: &str) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ShootConfig {
    pub fn problem(&self) -> CompactProblem {
        CompactProblem { ell: self.ell, m: self.m, n1: self.n1, n2: self.n2, lambda: self.lambda, p: self.p }
    }
}

impl SolveConfig {
    /// Default horizon: 200, or just short of `π` for the compact family.
    pub fn default_rmax(family: &CoefficientFamily) -> f64 {
        let (_, hi) = family.domain();
        if hi.is_finite() {
            hi * (1.0 - 1e-3)
        } else {
            200.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_parse() {
        assert_eq!(parse_family("power:2").unwrap(), CoefficientFamily::PowerLaw { theta: 2.0 });
        assert_eq!(
            parse_family("sinh:1.5,0.5,minus").unwrap(),
            CoefficientFamily::SinhRatio { alpha: 1.5, beta: 0.5, branch: Branch::Minus }
        );
        assert_eq!(parse_family("sin:3,0.5").unwrap(), CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.5 });
        assert!(parse_family("power:-1").is_err());
        assert!(parse_family("sinh:1,2,up").is_err());
        assert!(parse_family("cosh:1").is_err());
    }

    #[test]
    fn family_display_round_trips() {
        for s in ["power:2", "sinh:3,1,plus", "sin:3,0.5"] {
            assert_eq!(parse_family(s).unwrap().to_string(), s);
        }
        for s in ["power:1,5", "pml:1,3", "pdiff:2,1,5,1.5"] {
            assert_eq!(parse_nonlinearity(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn nonlinearities_parse() {
        assert_eq!(parse_nonlinearity("power:-1,3").unwrap(), Nonlinearity::PurePower { lambda: -1.0, p: 3.0 });
        assert!(parse_nonlinearity("pml:1").is_err());
        assert!(parse_nonlinearity("power:1,0.5").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[solve]\nalpha = 1\n").is_err());
        let c: FileConfig = toml::from_str("[solve]\na = 0.5\n[output]\njobs = 2\n").unwrap();
        assert_eq!(c.solve.a, Some(0.5));
        assert_eq!(c.output.jobs, Some(2));
    }
}
