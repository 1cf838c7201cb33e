use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use hypboundary::group::DEFAULT_ENUMERATION_CAP;
use hypboundary::MetricSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Growth,
    Unitarity,
    Shadows,
    Cones,
    L1norms,
    Boundedness,
    Converge,
    Cyclicity,
    Projections,
    Green,
    Classify,
    SquareMeasure,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::Growth,
        Experiment::Unitarity,
        Experiment::Shadows,
        Experiment::Cones,
        Experiment::L1norms,
        Experiment::Boundedness,
        Experiment::Converge,
        Experiment::Cyclicity,
        Experiment::Projections,
        Experiment::Green,
        Experiment::Classify,
        Experiment::SquareMeasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Growth => "growth",
            Experiment::Unitarity => "unitarity",
            Experiment::Shadows => "shadows",
            Experiment::Cones => "cones",
            Experiment::L1norms => "l1norms",
            Experiment::Boundedness => "boundedness",
            Experiment::Converge => "converge",
            Experiment::Cyclicity => "cyclicity",
            Experiment::Projections => "projections",
            Experiment::Green => "green",
            Experiment::Classify => "classify",
            Experiment::SquareMeasure => "square-measure",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment {s:?}, expected one of {}", names.join(", "))
            })
    }
}

/// A list of values written as "3..8" (inclusive), "8" or "1,2,5"; in JSON
/// also as an array of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueList {
    List(Vec<f64>),
    Text(String),
}

impl ValueList {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            ValueList::List(v) => Ok(v.clone()),
            ValueList::Text(s) => parse_list(s),
        }
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo.fract() != 0.0 || hi.fract() != 0.0 || hi < lo {
            return Err(format!("range {s:?} needs integer bounds lo ≤ hi"));
        }
        return Ok((lo as i64..=hi as i64).map(|v| v as f64).collect());
    }
    s.split(',').map(num).collect()
}

/// Everything an experiment run needs. Unset fields take per-experiment defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub spec: Option<String>,
    pub spec1: Option<String>,
    pub spec2: Option<String>,
    /// Radii R, or levels for `projections`, or word lengths M for `cyclicity`.
    pub radii: Option<ValueList>,
    /// "one" or "indicator:<u>,<v>".
    pub kernel: Option<String>,
    pub depth: Option<usize>,
    pub max_len: Option<usize>,
    pub rho: Option<f64>,
    pub rho_double: Option<f64>,
    pub half_width: Option<f64>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Fields set in `other` win.
    pub fn overlay(self, other: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            experiment: other.experiment.or(self.experiment),
            spec: other.spec.or(self.spec),
            spec1: other.spec1.or(self.spec1),
            spec2: other.spec2.or(self.spec2),
            radii: other.radii.or(self.radii),
            kernel: other.kernel.or(self.kernel),
            depth: other.depth.or(self.depth),
            max_len: other.max_len.or(self.max_len),
            rho: other.rho.or(self.rho),
            rho_double: other.rho_double.or(self.rho_double),
            half_width: other.half_width.or(self.half_width),
            threshold: other.threshold.or(self.threshold),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
        }
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        self.experiment
            .ok_or_else(|| ConfigError::Invalid("no experiment given".into()))
    }

    pub fn spec_or(&self, default: &str) -> Result<MetricSpec, ConfigError> {
        parse_spec(self.spec.as_deref().unwrap_or(default))
    }

    pub fn radii_or(&self, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let v = match &self.radii {
            Some(r) => r.values().map_err(ConfigError::Invalid)?,
            None => default.to_vec(),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ConfigError::Invalid("radii must be nonnegative numbers".into()));
        }
        Ok(v)
    }

    /// Integer radii; `cap` bounds them so that enumerations stay feasible.
    pub fn int_radii_or(&self, default: &[f64], cap: usize) -> Result<Vec<usize>, ConfigError> {
        let v = self.radii_or(default)?;
        if v.iter().any(|x| x.fract() != 0.0) {
            return Err(ConfigError::Invalid("this experiment needs integer radii".into()));
        }
        let v: Vec<usize> = v.into_iter().map(|x| x as usize).collect();
        if v.iter().any(|&x| x > cap) {
            return Err(ConfigError::Cap(format!("radius above {cap}")));
        }
        Ok(v)
    }

    pub fn usize_or(&self, field: Option<usize>, default: usize, cap: usize, name: &str) -> Result<usize, ConfigError> {
        let v = field.unwrap_or(default);
        if v > cap {
            return Err(ConfigError::Cap(format!("{name} = {v} exceeds {cap}")));
        }
        Ok(v)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

pub fn parse_spec(s: &str) -> Result<MetricSpec, ConfigError> {
    s.parse::<MetricSpec>()
        .map_err(|e| ConfigError::Invalid(format!("bad spec {s:?}: {e}")))
}

#[derive(Debug)]
pub enum ConfigError {
    Invalid(String),
    Cap(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Invalid(m) => write!(f, "invalid configuration: {m}"),
            ConfigError::Cap(m) => write!(f, "resource cap: {m} (enumeration cap {DEFAULT_ENUMERATION_CAP})"),
        }
    }
}
