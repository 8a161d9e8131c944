use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balls::config::BallConfig;
use crate::balls::generators::{homogenize, lattice_config};
use crate::error::{Error, Result};
use crate::pde::domain::Domain;
use crate::pde::field::ScalarField;
use crate::pde::grid::Grid;
use crate::pde::solver::SolveOptions;
use crate::placement::objective::{config_compliance, scale_factor};
use crate::placement::search::{optimize, OptimizerSettings};
use crate::scalar::Real;
use crate::theta::table::{Family, KValue, ThetaSample, ThetaTable};

/// How fine the grid is for a lattice of order `k`.
///
/// Each lattice cell gets an even number `m` of grid cells per axis, so
/// centers fall on nodes and `r/h = α·m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct HRule<T> {
    /// Target `r/h`.
    pub ratio: T,
    pub min_cells_per_lattice_cell: usize,
    /// Optional upper bound on the spacing.
    pub max_h: Option<T>,
    /// Memory cap on grid nodes.
    pub max_nodes: usize,
}

impl<T: Real> Default for HRule<T> {
    fn default() -> Self {
        Self {
            ratio: T::lit(8.0),
            min_cells_per_lattice_cell: 2,
            max_h: None,
            max_nodes: 20_000_000,
        }
    }
}

impl<T: Real> HRule<T> {
    pub fn cells_per_lattice_cell(&self, alpha: T, k: usize) -> usize {
        let mut m = self.min_cells_per_lattice_cell.max(2);
        if alpha > T::zero() {
            m = m.max((self.ratio / alpha).ceil().to_usize().unwrap_or(usize::MAX));
        }
        if let Some(h) = self.max_h {
            let need = (T::one() / (T::from_usize_lossy(k) * h))
                .ceil()
                .to_usize()
                .unwrap_or(usize::MAX);
            m = m.max(need);
        }
        m + m % 2
    }

    /// Grid on the unit cube for a lattice of order `k`.
    pub fn grid(&self, alpha: T, k: usize, d: usize) -> Result<Grid<T>> {
        let m = self.cells_per_lattice_cell(alpha, k);
        let cells = m
            .checked_mul(k)
            .ok_or_else(|| Error::ResolutionInfeasible("grid size overflows".into()))?;
        let nodes = (cells + 1).checked_pow(d as u32).unwrap_or(usize::MAX);
        if nodes > self.max_nodes {
            return Err(Error::ResolutionInfeasible(format!(
                "alpha = {alpha}, k = {k} needs {nodes} nodes, cap is {}",
                self.max_nodes
            )));
        }
        Grid::new(Domain::unit_cube(d)?, &vec![cells; d])
    }
}

/// Search effort for the optimized family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct EstimateOptions<T> {
    pub optimizer: OptimizerSettings<T>,
    /// Largest `k` for which the optimized family is attempted.
    pub optimize_up_to_k: usize,
}

impl<T: Real> Default for EstimateOptions<T> {
    fn default() -> Self {
        Self {
            optimizer: OptimizerSettings {
                max_iterations: 20,
                ..OptimizerSettings::default()
            },
            optimize_up_to_k: 4,
        }
    }
}

fn unit_value<T: Real>(config: &BallConfig<T>, grid: &Grid<T>) -> Result<T> {
    let f = ScalarField::constant(grid.clone(), T::one());
    let v = config_compliance(config, &f, &SolveOptions::default())?;
    Ok(scale_factor::<T>(config.n(), config.dim()) * v)
}

/// `θ̂(α)`: for each `k`, the best `n^(2/d) F(Σ, 1, I^d)` over the families
/// with `n = k^d`; the value at the largest `k` is reported with error bar
/// `|last − second-to-last|`.
pub fn estimate_theta<T: Real>(
    alpha: T,
    d: usize,
    k_list: &[usize],
    families: &[Family],
    h_rule: &HRule<T>,
) -> Result<ThetaSample<T>> {
    estimate_theta_with(alpha, d, k_list, families, h_rule, &EstimateOptions::default())
}

pub fn estimate_theta_with<T: Real>(
    alpha: T,
    d: usize,
    k_list: &[usize],
    families: &[Family],
    h_rule: &HRule<T>,
    options: &EstimateOptions<T>,
) -> Result<ThetaSample<T>> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[1] <= w[0]) || k_list[0] == 0 {
        return Err(Error::InvalidInput(format!(
            "k list must be positive and increasing, got {k_list:?}"
        )));
    }
    if families.is_empty() {
        return Err(Error::InvalidInput("no configuration family selected".into()));
    }
    if !(alpha >= T::zero() && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    let mut per_k: Vec<KValue<T>> = Vec::with_capacity(k_list.len());
    // best optimized configuration at the smallest k, reused by homogenization
    let mut seed_config: Option<(usize, BallConfig<T>)> = None;
    for &k in k_list {
        let grid = h_rule.grid(alpha, k, d)?;
        let h = grid.h_max();
        let lattice = lattice_config(k, alpha, d)?;
        let mut best: Option<KValue<T>> = None;
        let mut offer = |value: T, n: usize, family: Family| {
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(KValue { k, n, value, family, h });
            }
        };
        for &family in families {
            match family {
                Family::Lattice => offer(unit_value(&lattice, &grid)?, lattice.n(), family),
                Family::LatticeOptimize if k <= options.optimize_up_to_k => {
                    let f = ScalarField::constant(grid.clone(), T::one());
                    let trace = optimize(&lattice, &f, &options.optimizer)?;
                    let cfg = trace.final_config;
                    offer(trace.final_scaled, cfg.n(), family);
                    if seed_config.is_none() {
                        seed_config = Some((k, cfg));
                    }
                }
                Family::HomogenizedBest => {
                    if let Some((k0, base)) = &seed_config {
                        if k > *k0 && k % k0 == 0 {
                            let cfg = homogenize(base, k / k0, base.domain())?;
                            // duplicates on shared faces change n and hence α
                            if cfg.n() == k.pow(d as u32) {
                                offer(unit_value(&cfg, &grid)?, cfg.n(), family);
                            }
                        }
                    }
                }
                Family::LatticeOptimize => {}
            }
        }
        per_k.push(best.expect("lattice family or skipped families"));
    }
    let last = per_k.last().unwrap().clone();
    let err = if per_k.len() >= 2 {
        (last.value - per_k[per_k.len() - 2].value).abs()
    } else {
        T::zero()
    };
    Ok(ThetaSample {
        alpha,
        theta: last.value.max(T::zero()),
        err,
        k_max: last.k,
        h: last.h,
        family: last.family,
        per_k,
    })
}

/// Outcome of one sweep point; failures are kept so the sweep continues.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct SweepPoint<T> {
    pub alpha: T,
    pub sample: Option<ThetaSample<T>>,
    pub error: Option<String>,
}

/// Runs [`estimate_theta_with`] for every `α` on the current rayon pool and
/// assembles the table in `α` order.
pub fn sweep_theta<T: Real>(
    alphas: &[T],
    d: usize,
    k_list: &[usize],
    families: &[Family],
    h_rule: &HRule<T>,
    options: &EstimateOptions<T>,
) -> (Option<ThetaTable<T>>, Vec<SweepPoint<T>>) {
    let points: Vec<SweepPoint<T>> = alphas
        .par_iter()
        .map(
            |&alpha| match estimate_theta_with(alpha, d, k_list, families, h_rule, options) {
                Ok(s) => SweepPoint {
                    alpha,
                    sample: Some(s),
                    error: None,
                },
                Err(e) => SweepPoint {
                    alpha,
                    sample: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    let samples: Vec<ThetaSample<T>> = points.iter().filter_map(|p| p.sample.clone()).collect();
    let table = if samples.is_empty() {
        None
    } else {
        ThetaTable::new(d, samples).ok()
    };
    (table, points)
}
