//! Run configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use complace::balls::{boundary_cover, lattice_config, BallConfig};
use complace::limit::LimitOptions;
use complace::pde::io::field_from_csv;
use complace::pde::{Domain, Grid, OuterBoundary, ScalarField};
use complace::placement::OptimizerSettings;
use complace::theta::{EstimateOptions, Family, HRule};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    /// Box extents; the unit cube when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extents: Option<Vec<f64>>,
    #[serde(default)]
    pub outer: OuterBoundary,
    #[serde(default)]
    pub f: FSpec,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balls: Option<BallsSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub optimizer: OptimizerSettings<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Load `f`. Gridded CSV files are resolved against the config directory and
/// interpolated onto the working grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    Constant(f64),
    /// Sum of `coeff · Π x_i^powers_i`.
    Polynomial(Vec<Monomial>),
    Gaussians {
        #[serde(default)]
        offset: f64,
        bumps: Vec<Bump>,
    },
    Csv(PathBuf),
}

impl Default for FSpec {
    fn default() -> Self {
        FSpec::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// `amplitude · exp(−|x − center|² / (2 width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BallsSpec {
    /// No obstacles besides the outer boundary.
    None,
    Centers(Vec<Vec<f64>>),
    /// The `k^d` cell-centered lattice at the config `α`.
    Lattice {
        k: usize,
    },
    /// The lattice completed to a boundary-covering set.
    CoveredLattice {
        k: usize,
    },
}

/// Grid resolution: explicit cells, explicit `h`, or the ratio rule
/// `h = min(r/ratio, L/min_cells)` capped at `max_nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_cells: Option<usize>,
    pub max_nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cells: None,
            h: None,
            ratio: 8.0,
            min_cells: None,
            max_nodes: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSpec {
    pub alphas: Vec<f64>,
    pub k_list: Vec<usize>,
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    #[serde(default)]
    pub h_rule: HRule<f64>,
    #[serde(default)]
    pub estimate: EstimateOptions<f64>,
    /// `t₁` used by the lower bound; `√d/2` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_cap: Option<f64>,
    /// Also build `g_α` at this `α` and check its convexity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_alpha: Option<f64>,
}

fn default_families() -> Vec<Family> {
    vec![Family::Lattice]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    /// Use the closed-form one-dimensional `g_α` at the config `α`.
    #[serde(default)]
    pub exact_1d: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_file: Option<PathBuf>,
    /// Cells per axis of the density grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// Breakpoint spacing of the exact `g`.
    #[serde(default = "default_g_spacing")]
    pub g_spacing: f64,
    #[serde(default = "default_g_min")]
    pub g_min: f64,
    /// Last breakpoint of the exact `g` when `α = 0` (otherwise the cutoff).
    #[serde(default = "default_g_max")]
    pub g_max: f64,
    #[serde(default)]
    pub options: LimitOptions,
}

fn default_g_spacing() -> f64 {
    5e-5
}

fn default_g_min() -> f64 {
    1e-3
}

fn default_g_max() -> f64 {
    10.0
}

impl LimitSpec {
    pub fn exact() -> Self {
        serde_json::from_str(r#"{"exact_1d": true}"#).expect("defaults parse")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub n_list: Vec<usize>,
    /// Histogram bins per axis are `ceil(bin_scale · n^(1/(d+2)))` in `d ≥ 2`.
    #[serde(default = "default_bin_scale")]
    pub bin_scale: f64,
    /// Start each `n` from the quantiles of the previous optimum (one dimension).
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_bin_scale() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    /// Parses the document, applying dotted-path overrides first.
    pub fn parse(text: &str, overrides: &[String]) -> CliResult<Self> {
        let config: RunConfig = if overrides.is_empty() {
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?
        } else {
            let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
            for o in overrides {
                apply_override(&mut value, o)?;
            }
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("config after overrides: {e}")))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(CliError::Config(format!(
                "dimension must be 1, 2 or 3, got {}",
                self.dimension
            )));
        }
        if let Some(e) = &self.extents {
            if e.len() != self.dimension {
                return Err(CliError::Config(format!(
                    "{} extents given for dimension {}",
                    e.len(),
                    self.dimension
                )));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(CliError::Config(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.grid.ratio > 0.0) {
            return Err(CliError::Config("grid.ratio must be positive".into()));
        }
        self.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn domain(&self) -> CliResult<Domain<f64>> {
        let extents = self.extents.clone().unwrap_or_else(|| vec![1.0; self.dimension]);
        Ok(Domain::new(extents, self.outer)?)
    }

    /// Grid for balls of radius `r` under the resolution rule.
    pub fn grid_for_radius(&self, r: f64) -> CliResult<Grid<f64>> {
        let domain = self.domain()?;
        let d = self.dimension;
        let grid = if let Some(cells) = &self.grid.cells {
            Grid::new(domain, cells)?
        } else {
            let l_min = domain.extents().iter().cloned().fold(f64::INFINITY, f64::min);
            let min_cells = self.grid.min_cells.unwrap_or(match d {
                1 => 1000,
                2 => 128,
                _ => 32,
            });
            let mut h = self.grid.h.unwrap_or(l_min / min_cells as f64);
            if self.grid.h.is_none() && r > 0.0 {
                h = h.min(r / self.grid.ratio);
            }
            let nodes: f64 = domain.extents().iter().map(|l| (l / h).ceil() + 1.0).product();
            if nodes > self.grid.max_nodes as f64 {
                return Err(CliError::Core(complace::Error::ResolutionInfeasible(format!(
                    "h = {h:.3e} needs {nodes:.3e} nodes, cap is {}",
                    self.grid.max_nodes
                ))));
            }
            Grid::with_spacing(domain, h)?
        };
        Ok(grid)
    }

    /// Seeded optimizer settings: the run seed is the only randomness source.
    pub fn optimizer_settings(&self) -> OptimizerSettings<f64> {
        OptimizerSettings {
            seed: self.seed,
            ..self.optimizer.clone()
        }
    }

    /// The explicit ball set, if any; `Ok(None)` means no obstacles.
    pub fn ball_config(&self) -> CliResult<Option<BallConfig<f64>>> {
        let domain = self.domain()?;
        let cube = || {
            if domain.is_unit_cube() {
                Ok(())
            } else {
                Err(CliError::Config("lattice generators need the unit cube".into()))
            }
        };
        Ok(match &self.balls {
            None | Some(BallsSpec::None) => None,
            Some(BallsSpec::Centers(c)) => Some(BallConfig::new(domain.clone(), self.alpha, c.clone())?),
            Some(BallsSpec::Lattice { k }) => {
                cube()?;
                Some(lattice_config(*k, self.alpha, self.dimension)?)
            }
            Some(BallsSpec::CoveredLattice { k }) => {
                cube()?;
                Some(boundary_cover(&lattice_config(*k, self.alpha, self.dimension)?)?)
            }
        })
    }
}

impl FSpec {
    /// Samples the load on `grid`; `base` resolves relative CSV paths.
    pub fn field(&self, grid: &Grid<f64>, base: Option<&Path>) -> CliResult<ScalarField<f64>> {
        let d = grid.dim();
        let field = match self {
            FSpec::Constant(c) => ScalarField::constant(grid.clone(), *c),
            FSpec::Polynomial(terms) => {
                if let Some(t) = terms.iter().find(|t| t.powers.len() != d) {
                    return Err(CliError::Config(format!(
                        "monomial {:?} has {} powers, expected {d}",
                        t.powers,
                        t.powers.len()
                    )));
                }
                ScalarField::from_fn(grid.clone(), |x| {
                    terms
                        .iter()
                        .map(|t| {
                            t.coeff
                                * t.powers
                                    .iter()
                                    .zip(x)
                                    .map(|(&p, &xi)| xi.powi(p as i32))
                                    .product::<f64>()
                        })
                        .sum()
                })?
            }
            FSpec::Gaussians { offset, bumps } => {
                if let Some(b) = bumps.iter().find(|b| b.center.len() != d || !(b.width > 0.0)) {
                    return Err(CliError::Config(format!("bad gaussian bump {b:?}")));
                }
                ScalarField::from_fn(grid.clone(), |x| {
                    offset
                        + bumps
                            .iter()
                            .map(|b| {
                                let r2: f64 = b.center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
                                b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp()
                            })
                            .sum::<f64>()
                })?
            }
            FSpec::Csv(path) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                let src: ScalarField<f64> = field_from_csv(&text)?;
                if !src.grid().domain().same_box(grid.domain()) {
                    return Err(CliError::Config(format!("{} covers a different box", path.display())));
                }
                let values = (0..grid.len())
                    .map(|i| {
                        src.interpolate(&grid.node_point(i))
                            .ok_or_else(|| CliError::Config(format!("{} does not cover node {i}", path.display())))
                    })
                    .collect::<CliResult<Vec<f64>>>()?;
                ScalarField::new(grid.clone(), values)?
            }
        };
        if field.values().iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("f has non-finite values".into()));
        }
        Ok(field)
    }
}

/// `a.b.c=VALUE`; the value is read as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, spec: &str) -> CliResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} has an empty segment")));
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::Config(format!("override segment {part:?} indexes an array")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("override index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("override {key:?} descends into a scalar"))),
        };
    }
    unreachable!("split always yields a segment")
}
