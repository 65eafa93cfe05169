//! Experiment files: sections `[grid]`, `[flux]`, `[initial]`, `[run]` and
//! `[output]` of `key = value` lines (a TOML subset).
//!
//! | key | unit / type | default |
//! |---|---|---|
//! | `grid.half_width` | length, scalar or per-axis list | — |
//! | `grid.cells` | count, scalar or per-axis list | — |
//! | `grid.dim` | axes (only needed with scalar `half_width` and `cells`) | length of `flux.p` |
//! | `flux.p` | exponent list | — |
//! | `flux.kind` | `"orthotropic"` or `"perturbed"` | `"orthotropic"` |
//! | `flux.ellipticity` | Λ ≥ 1 | 1 |
//! | `flux.seed` | perturbation seed (perturbed kind) | `run.seed` |
//! | `initial.shape` | `"box-bump"`, `"product-bump"`, `"two-bump"` | `"box-bump"` |
//! | `initial.r0` | length | — |
//! | `initial.amplitude` | value | 1 |
//! | `initial.separation` | length (two-bump) | — |
//! | `run.horizon` | time | — |
//! | `run.safety` | fraction of the stable step | 0.9 |
//! | `run.cadence` | `"uniform"` or `"log"` | `"uniform"` |
//! | `run.record_interval` | time (uniform cadence) | horizon/100 |
//! | `run.first_record` | time (log cadence) | horizon·1e-4 |
//! | `run.per_decade` | records per decade (log cadence) | 10 |
//! | `run.threshold` | `"absolute"` or `"relative"` | regime default |
//! | `run.epsilon` | support threshold value | 0 (absolute) |
//! | `run.fit_window` | `[t0, t1]` times | last decade |
//! | `run.max_steps` | count | 5·10⁸ |
//! | `run.seed` | master seed | 0 |
//! | `output.dir` | path, relative to the config file | `"out"` |
//! | `output.prefix` | file stem prefix | config file stem |
//! | `output.snapshot_every` | keep every k-th record (0: first and last) | 0 |
//! | `output.snapshots` | write snapshot files | false |
//! | `output.svg` | write log-log plots | false |

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::diagnostics::{last_decade, SupportThreshold};
use crate::numeric::split_seed;
use crate::solver::{Cadence, FluxKind, FluxModel, Grid, InitialShape, RunConfig, SolverError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<SolverError> for ConfigError {
    fn from(e: SolverError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, dim: usize, what: &str) -> Result<Vec<T>, ConfigError> {
        match self {
            OneOrMany::One(x) => Ok(vec![x.clone(); dim]),
            OneOrMany::Many(v) if v.len() == dim => Ok(v.clone()),
            OneOrMany::Many(v) => Err(ConfigError::Invalid(format!(
                "{what} lists {} entries for {dim} axes",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: OneOrMany<f64>,
    pub cells: OneOrMany<usize>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    pub p: Vec<f64>,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub ellipticity: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "default_shape")]
    pub shape: String,
    pub r0: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub separation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_cadence")]
    pub cadence: String,
    pub record_interval: Option<f64>,
    pub first_record: Option<f64>,
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    pub threshold: Option<String>,
    pub epsilon: Option<f64>,
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub svg: bool,
}

fn one() -> f64 {
    1.0
}
fn default_kind() -> String {
    "orthotropic".into()
}
fn default_shape() -> String {
    "box-bump".into()
}
fn default_safety() -> f64 {
    0.9
}
fn default_cadence() -> String {
    "uniform".into()
}
fn default_per_decade() -> u32 {
    10
}
fn default_max_steps() -> u64 {
    500_000_000
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub flux: FluxSection,
    pub initial: InitialSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory of the file, for resolving relative output paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub name: String,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.run_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) | ConfigError::Invalid(m) => {
                ConfigError::Parse(format!("{}: {m}", path.display()))
            }
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("run")
            .to_string();
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.flux.p.len()
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let dim = self.dim();
        if let Some(d) = self.grid.dim {
            if d != dim {
                return Err(ConfigError::Invalid(format!(
                    "grid.dim = {d} but flux.p has {dim} entries"
                )));
            }
        }
        let half = self.grid.half_width.expand(dim, "grid.half_width")?;
        let cells = self.grid.cells.expand(dim, "grid.cells")?;
        Ok(Grid::new(half, cells)?)
    }

    pub fn flux(&self) -> Result<FluxModel, ConfigError> {
        let kind = match self.flux.kind.as_str() {
            "orthotropic" => FluxKind::Orthotropic,
            "perturbed" => FluxKind::Perturbed {
                seed: self.flux.seed.unwrap_or(split_seed(self.run.seed, 0)),
            },
            other => return Err(ConfigError::Invalid(format!("unknown flux.kind `{other}`"))),
        };
        Ok(FluxModel::new(
            kind,
            self.flux.p.clone(),
            self.flux.ellipticity,
        )?)
    }

    pub fn shape(&self) -> Result<InitialShape, ConfigError> {
        match (self.initial.shape.as_str(), self.initial.separation) {
            ("box-bump", _) => Ok(InitialShape::BoxBump),
            ("product-bump", _) => Ok(InitialShape::ProductBump),
            ("two-bump", Some(separation)) => Ok(InitialShape::TwoBump { separation }),
            ("two-bump", None) => Err(ConfigError::Invalid(
                "two-bump datum needs initial.separation".into(),
            )),
            (other, _) => Err(ConfigError::Invalid(format!(
                "unknown initial.shape `{other}`"
            ))),
        }
    }

    pub fn cadence(&self) -> Result<Cadence, ConfigError> {
        let horizon = self.run.horizon;
        match self.run.cadence.as_str() {
            "uniform" => Ok(Cadence::Uniform {
                interval: self.run.record_interval.unwrap_or(horizon / 100.0),
            }),
            "log" => Ok(Cadence::Logarithmic {
                first: self.run.first_record.unwrap_or(horizon * 1e-4),
                per_decade: self.run.per_decade,
            }),
            other => Err(ConfigError::Invalid(format!(
                "unknown run.cadence `{other}`"
            ))),
        }
    }

    pub fn threshold(&self) -> Result<Option<SupportThreshold>, ConfigError> {
        let eps = self.run.epsilon;
        match (self.run.threshold.as_deref(), eps) {
            (None, None) => Ok(None),
            (None | Some("absolute"), e) => Ok(Some(SupportThreshold::Absolute(e.unwrap_or(0.0)))),
            (Some("relative"), Some(e)) => Ok(Some(SupportThreshold::RelativeToMax(e))),
            (Some("relative"), None) => Err(ConfigError::Invalid(
                "relative threshold needs run.epsilon".into(),
            )),
            (Some(other), _) => Err(ConfigError::Invalid(format!(
                "unknown run.threshold `{other}`"
            ))),
        }
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.run
            .fit_window
            .map(|[a, b]| (a, b))
            .unwrap_or_else(|| last_decade(self.run.horizon))
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let cadence = self.cadence()?;
        let mut rc = RunConfig::new(
            self.grid()?,
            self.flux()?,
            self.shape()?,
            self.initial.r0,
            self.initial.amplitude,
            self.run.horizon,
        );
        rc.safety = self.run.safety;
        rc.cadence = cadence;
        rc.snapshot_every = self.output.snapshot_every;
        rc.threshold = self.threshold()?;
        rc.max_steps = self.run.max_steps;
        if !(self.run.horizon >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "run.horizon = {} must be nonnegative",
                self.run.horizon
            )));
        }
        Ok(rc)
    }

    pub fn output_dir(&self) -> PathBuf {
        let dir = self
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"));
        if dir.is_absolute() {
            dir
        } else {
            self.base_dir.join(dir)
        }
    }

    pub fn prefix(&self) -> String {
        self.output.prefix.clone().unwrap_or_else(|| {
            if self.name.is_empty() {
                "run".into()
            } else {
                self.name.clone()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
half_width = 1.0
cells = 128

[flux]
p = [3.0]

[initial]
r0 = 0.05

[run]
horizon = 0.1
"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        let rc = cfg.run_config().unwrap();
        assert_eq!(rc.grid.cells(), &[128]);
        assert_eq!(rc.shape, InitialShape::BoxBump);
        assert_eq!(rc.amplitude, 1.0);
        assert_eq!(rc.cadence, Cadence::Uniform { interval: 0.001 });
        assert_eq!(cfg.fit_window(), (0.01, 0.1));
        assert_eq!(cfg.output, OutputSection::default());
    }

    #[test]
    fn per_axis_lists_and_log_cadence() {
        let text = MINIMAL.replace("p = [3.0]", "p = [2.2, 2.5]").replace("cells = 128", "cells = [64, 32]")
            + "cadence = \"log\"\nfirst_record = 1e-3\nper_decade = 4\nthreshold = \"relative\"\nepsilon = 1e-6\n";
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let rc = cfg.run_config().unwrap();
        assert_eq!(rc.grid.cells(), &[64, 32]);
        assert_eq!(
            rc.cadence,
            Cadence::Logarithmic {
                first: 1e-3,
                per_decade: 4
            }
        );
        assert_eq!(rc.threshold, Some(SupportThreshold::RelativeToMax(1e-6)));
    }

    #[test]
    fn errors_name_the_problem() {
        let bad_key = MINIMAL.replace("r0 = 0.05", "r0 = 0.05\nradius = 3");
        assert!(ExperimentConfig::parse(&bad_key)
            .unwrap_err()
            .to_string()
            .contains("radius"));
        let bad_len = MINIMAL.replace("cells = 128", "cells = [64, 64]");
        assert!(ExperimentConfig::parse(&bad_len)
            .unwrap_err()
            .to_string()
            .contains("grid.cells"));
        let bad_p = MINIMAL.replace("p = [3.0]", "p = [0.5]");
        assert!(ExperimentConfig::parse(&bad_p)
            .unwrap_err()
            .to_string()
            .contains("0.5"));
        let two = MINIMAL.replace("r0 = 0.05", "r0 = 0.05\nshape = \"two-bump\"");
        assert!(ExperimentConfig::parse(&two)
            .unwrap_err()
            .to_string()
            .contains("separation"));
    }
}
