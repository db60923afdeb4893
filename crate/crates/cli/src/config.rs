//! Run configuration: a plain `key = value` file plus command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use maxwell_dg::reference_element::MAX_SOLVER_DEGREE;
use maxwell_dg::scenarios::{Scenario, ScenarioKind};
use maxwell_dg::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: PathBuf, line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Steps at which the postprocessed errors are computed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PostprocessSteps {
    /// Every step at which errors are recorded.
    #[default]
    Recorded,
    /// Only the final step.
    Final,
    /// The listed steps and the final step.
    List(Vec<usize>),
}

impl FromStr for PostprocessSteps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "all" | "recorded" => Ok(Self::Recorded),
            "final" => Ok(Self::Final),
            list => parse_list(list).map(Self::List),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub degree: usize,
    /// Cubes per side of the structured mesh.
    pub n: Option<usize>,
    /// Mesh file, taking precedence over `n`.
    pub mesh: Option<PathBuf>,
    /// Time step override (s); the CFL step otherwise.
    pub dt: Option<f64>,
    /// Final time override (s).
    pub t_final: Option<f64>,
    pub out: PathBuf,
    /// Record errors every `error_stride` steps (0: final step only).
    pub error_stride: usize,
    pub postprocess_steps: PostprocessSteps,
    /// Probe points; the scenario's own set when empty.
    pub probes: Vec<Vec3>,
    /// Mesh resolutions of a convergence sweep.
    pub sweep: Vec<usize>,
    /// Degree of the reference run in comparisons (default `degree + 2`).
    pub reference_degree: Option<usize>,
    /// Reference time steps per primary step in comparisons.
    pub reference_substeps: usize,
    /// Record the discrete energy after every step.
    pub record_energy: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Cavity,
            degree: 2,
            n: None,
            mesh: None,
            dt: None,
            t_final: None,
            out: PathBuf::from("out"),
            error_stride: 1,
            postprocess_steps: PostprocessSteps::Recorded,
            probes: Vec::new(),
            sweep: Vec::new(),
            reference_degree: None,
            reference_substeps: 3,
            record_energy: false,
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_points(s: &str) -> Result<Vec<Vec3>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let c: Vec<f64> = parse_list(t)?;
            match c[..] {
                [x, y, z] => Ok(Vec3::new(x, y, z)),
                _ => Err(format!("`{t}` is not a point `x,y,z`")),
            }
        })
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.into(),
        message: format!("`{v}`: {e}"),
    })
}

fn wrap<T>(key: &str, r: Result<T, String>) -> Result<T, ConfigError> {
    r.map_err(|message| ConfigError::Value { key: key.into(), message })
}

impl RunConfig {
    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let v = v.trim();
        match key {
            "scenario" => self.scenario = value(key, v)?,
            "degree" => self.degree = value(key, v)?,
            "n" => self.n = Some(value(key, v)?),
            "mesh" => self.mesh = Some(PathBuf::from(v)),
            "dt" => self.dt = Some(value(key, v)?),
            "t_final" => self.t_final = Some(value(key, v)?),
            "out" => self.out = PathBuf::from(v),
            "error_stride" => self.error_stride = value(key, v)?,
            "postprocess_steps" => self.postprocess_steps = wrap(key, v.parse())?,
            "probes" => self.probes = wrap(key, parse_points(v))?,
            "sweep" => self.sweep = wrap(key, parse_list(v))?,
            "reference_degree" => self.reference_degree = Some(value(key, v)?),
            "reference_substeps" => self.reference_substeps = value(key, v)?,
            "record_energy" => self.record_energy = wrap(key, parse_bool(v))?,
            _ => {
                return Err(ConfigError::Value {
                    key: key.into(),
                    message: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Applies the `key = value` lines of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, path: &Path, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: path.into(),
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(key.trim(), v).map_err(|e| ConfigError::Syntax {
                path: path.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(path, &text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=MAX_SOLVER_DEGREE).contains(&self.degree) {
            return Err(ConfigError::Invalid(format!(
                "degree must be in 1..={MAX_SOLVER_DEGREE}, got {}",
                self.degree
            )));
        }
        if let Some(r) = self.reference_degree {
            if !(1..=MAX_SOLVER_DEGREE).contains(&r) {
                return Err(ConfigError::Invalid(format!(
                    "reference degree must be in 1..={MAX_SOLVER_DEGREE}, got {r}"
                )));
            }
        }
        if self.n == Some(0) {
            return Err(ConfigError::Invalid("n must be positive".into()));
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) || self.sweep.first() == Some(&0) {
            return Err(ConfigError::Invalid(format!(
                "sweep list must be positive and strictly increasing, got {:?}",
                self.sweep
            )));
        }
        for (key, v) in [("dt", self.dt), ("t_final", self.t_final)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError::Invalid(format!("{key} must be positive, got {v}")));
                }
            }
        }
        if self.reference_substeps == 0 {
            return Err(ConfigError::Invalid("reference_substeps must be positive".into()));
        }
        if self.mesh.is_none() && self.n.is_none() && self.sweep.is_empty() {
            return Err(ConfigError::Invalid("either n, mesh or sweep must be given".into()));
        }
        if Scenario::by_kind(self.scenario).requires_mesh_file && self.mesh.is_none() {
            return Err(ConfigError::Invalid(format!(
                "scenario `{}` needs a mesh file",
                self.scenario
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let text = "\
# cavity sweep
scenario = cavity
degree = 1
sweep = 4, 6, 8
error_stride = 0   # final only
postprocess_steps = 10,20
probes = 0.1,0.2,0.3; 0.5,0.5,0.5
dt = 1e-12
record_energy = yes
";
        let mut cfg = RunConfig::default();
        cfg.apply_text(Path::new("a.cfg"), text).unwrap();
        assert_eq!(cfg.degree, 1);
        assert_eq!(cfg.sweep, vec![4, 6, 8]);
        assert_eq!(cfg.error_stride, 0);
        assert_eq!(cfg.postprocess_steps, PostprocessSteps::List(vec![10, 20]));
        assert_eq!(cfg.probes.len(), 2);
        assert_eq!(cfg.probes[1], Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(cfg.dt, Some(1e-12));
        assert!(cfg.record_energy);
        cfg.validate().unwrap();
    }

    #[test]
    fn reports_line_numbers() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text(Path::new("b.cfg"), "degree = 2\nbogus\n").unwrap_err();
        assert!(err.to_string().starts_with("b.cfg:2:"), "{err}");
        let err = cfg.apply_text(Path::new("b.cfg"), "colour = red\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
        let err = cfg.apply_text(Path::new("b.cfg"), "scenario = tokamak\n").unwrap_err();
        assert!(err.to_string().contains("b.cfg:1:"), "{err}");
    }

    #[test]
    fn validation_rejects_bad_values() {
        let base = RunConfig {
            n: Some(4),
            ..RunConfig::default()
        };
        base.validate().unwrap();
        for bad in [
            RunConfig { degree: 5, ..base.clone() },
            RunConfig { degree: 0, ..base.clone() },
            RunConfig { sweep: vec![4, 4], ..base.clone() },
            RunConfig { sweep: vec![6, 4], ..base.clone() },
            RunConfig { dt: Some(-1.0), ..base.clone() },
            RunConfig { n: None, ..base.clone() },
            RunConfig { scenario: ScenarioKind::Scattering, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
