//! TOML run configuration. Unknown keys are errors; every message names the
//! file and the line it refers to.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::coupled::{PhysicsParams, SolverConfig, WallTemperature};
use crate::grid::{BoundaryPartition, Edge, Grid, VectorField};

use super::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EdgeValues {
    Uniform(f64),
    PerEdge([f64; 4]),
}

/// Wall temperature; edge lists are `[bottom, right, top, left]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TwConfig {
    Constant { values: EdgeValues },
    /// `[start, end]` per edge, from the lower to the upper coordinate.
    EdgeLinear { values: [[f64; 2]; 4] },
    /// Counter-clockwise from the origin, one value per boundary node.
    NodeTable { values: Vec<f64> },
}

impl TwConfig {
    pub fn to_wall(&self) -> WallTemperature {
        match self {
            TwConfig::Constant { values: EdgeValues::Uniform(c) } => WallTemperature::uniform(*c),
            TwConfig::Constant { values: EdgeValues::PerEdge(v) } => WallTemperature::EdgeConstant(*v),
            TwConfig::EdgeLinear { values } => WallTemperature::EdgeLinear(values.map(|[a, b]| (a, b))),
            TwConfig::NodeTable { values } => WallTemperature::NodeTable(values.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub gamma1: Vec<String>,
    pub tw: TwConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    /// Constant `[kx, ky]`.
    pub k: Option<[f64; 2]>,
    /// Per-node `kx,ky` rows in node order, relative to the config file.
    pub k_file: Option<PathBuf>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Vtk,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    pub emit_report: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("."),
            formats: vec![Format::Csv],
            emit_report: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub boundary: BoundarySection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lambda: Vec<f64>,
    #[serde(default = "unit_scale")]
    pub k_scale: Vec<f64>,
    #[serde(default = "unit_scale")]
    pub tw_scale: Vec<f64>,
    /// Concurrent solves; defaults to the available parallelism.
    pub workers: Option<usize>,
}

fn unit_scale() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub domain: DomainSection,
    pub boundary: BoundarySection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSection,
    pub sweep: SweepSection,
}

impl SweepConfig {
    pub fn base(&self) -> RunConfig {
        RunConfig {
            domain: self.domain.clone(),
            boundary: self.boundary.clone(),
            physics: self.physics.clone(),
            solver: self.solver,
            output: self.output.clone(),
        }
    }
}

/// A validated problem ready to solve.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub partition: BoundaryPartition,
    pub params: PhysicsParams,
    pub solver: SolverConfig,
    pub output: OutputSection,
}

/// Config text with its origin, for line-anchored messages.
pub struct Source {
    pub path: PathBuf,
    pub text: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: cannot read config: {e}", path.display())))?;
        Ok(Source {
            path: path.to_path_buf(),
            text,
        })
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        toml::from_str(&self.text).map_err(|e| {
            let line = e.span().map(|s| self.line_of_offset(s.start)).unwrap_or(1);
            CliError::usage(format!("{}:{}: {}", self.path.display(), line, e.message().trim_end()))
        })
    }

    fn line_of_offset(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    /// Line of the first `key = ...` assignment, or 1.
    pub fn line_of_key(&self, key: &str) -> usize {
        self.text
            .lines()
            .position(|l| {
                l.trim_start()
                    .strip_prefix(key)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map_or(1, |i| i + 1)
    }

    pub fn error_at(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::usage(format!("{}:{}: {}: {msg}", self.path.display(), self.line_of_key(key), key))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, Source), CliError> {
        let src = Source::read(path)?;
        let cfg = src.parse()?;
        Ok((cfg, src))
    }

    /// Re-validate every module-level invariant against the source.
    pub fn problem(&self, src: &Source) -> Result<Problem, CliError> {
        let d = &self.domain;
        let grid = Grid::new(d.lx, d.ly, d.nx, d.ny).map_err(|e| {
            let key = if !(d.lx > 0.0) {
                "lx"
            } else if !(d.ly > 0.0) {
                "ly"
            } else if d.nx < 2 {
                "nx"
            } else {
                "ny"
            };
            src.error_at(key, e)
        })?;
        let edges = self
            .boundary
            .gamma1
            .iter()
            .map(|n| Edge::parse(n))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(|e| src.error_at("gamma1", e))?;
        let partition = BoundaryPartition::new(&edges).map_err(|e| src.error_at("gamma1", e))?;

        let k = match (&self.physics.k, &self.physics.k_file) {
            (Some(k), None) => VectorField::constant(grid, *k),
            (None, Some(file)) => read_k_table(&src.resolve(file), &grid).map_err(|e| src.error_at("k_file", e))?,
            (Some(_), Some(_)) => return Err(src.error_at("k_file", "give either `k` or `k_file`, not both")),
            (None, None) => {
                return Err(CliError::usage(format!(
                    "{}:{}: [physics] needs `k` or `k_file`",
                    src.path.display(),
                    src.line_of_key("lambda")
                )))
            }
        };
        let params = PhysicsParams::new(k, self.physics.lambda, self.boundary.tw.to_wall());
        if !(params.lambda.is_finite() && params.lambda > 0.0) {
            return Err(src.error_at("lambda", "must be positive"));
        }
        if !params.k.x().iter().chain(params.k.y()).all(|v| v.is_finite()) {
            return Err(src.error_at("k", "components must be finite"));
        }
        params.validate(&grid).map_err(|e| src.error_at("values", e))?;
        self.solver.validate().map_err(|e| {
            let key = if !(self.solver.damping > 0.0 && self.solver.damping <= 1.0) {
                "damping"
            } else {
                "picard_tol"
            };
            src.error_at(key, e)
        })?;
        Ok(Problem {
            grid,
            partition,
            params,
            solver: self.solver,
            output: self.output.clone(),
        })
    }
}

/// `kx,ky` per line in node order; blank lines, `#` comments and a
/// non-numeric header line are skipped.
fn read_k_table(path: &Path, grid: &Grid) -> Result<VectorField, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut kx = Vec::new();
    let mut ky = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 2 => {
                kx.push(v[0]);
                ky.push(v[1]);
            }
            Err(_) if kx.is_empty() && n == 0 => continue,
            _ => return Err(format!("{}:{}: expected `kx,ky`", path.display(), n + 1)),
        }
    }
    VectorField::from_components(*grid, kx, ky).map_err(|e| format!("{}: {e}", path.display()))
}
