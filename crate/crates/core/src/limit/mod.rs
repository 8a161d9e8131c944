//! The density limit problem `min ∫ f² g_α(μ)` over probability densities,
//! and the closed-form one-dimensional references.

pub mod exact;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::field::ScalarField;
use crate::scalar::{unit_ball_volume, Real};
use crate::theta::gfunc::GFunction;

pub use exact::{oned_g_exact, oned_limit_exact, oned_theta_exact};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeasure<T> {
    pub density: ScalarField<T>,
    pub mass: T,
}

impl<T: Real> DensityMeasure<T> {
    pub fn new(density: ScalarField<T>) -> Result<Self> {
        if density.values().iter().any(|&v| v < T::zero()) {
            return Err(Error::InvalidInput("density must be nonnegative".into()));
        }
        let mass = density.integral();
        Ok(Self { density, mass })
    }

    /// Rescales to unit mass.
    pub fn normalized(density: ScalarField<T>) -> Result<Self> {
        let m = Self::new(density)?;
        if !(m.mass > T::zero()) {
            return Err(Error::InvalidInput("density has zero mass".into()));
        }
        let inv = m.mass.recip();
        Self::new(m.density.map(|v| v * inv)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Feasibility<T> {
    /// `ω_d α^d < |Ω| t₁^d`, the check that gates the solve.
    pub covering: bool,
    /// `α < |Ω| t₁`, reported only.
    pub literal: bool,
    pub t1: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSolution<T> {
    pub measure: DensityMeasure<T>,
    pub c: T,
    pub objective: T,
    pub mass_error: T,
    /// Largest distance from `c/f²` to `−∂g(μ)` over nodes with `f > 0`.
    pub inclusion_residual: T,
    pub iterations: usize,
    pub feasibility: Feasibility<T>,
}

/// JSON-facing summary of a [`LimitSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LimitSummary<T> {
    pub c: T,
    pub objective: T,
    pub mass: T,
    pub mass_error: T,
    pub inclusion_residual: T,
    pub iterations: usize,
    pub max_density: T,
    pub feasibility: Feasibility<T>,
}

impl<T: Real> LimitSolution<T> {
    pub fn summary(&self) -> LimitSummary<T> {
        LimitSummary {
            c: self.c,
            objective: self.objective,
            mass: self.measure.mass,
            mass_error: self.mass_error,
            inclusion_residual: self.inclusion_residual,
            iterations: self.iterations,
            max_density: self.measure.density.max_value(),
            feasibility: self.feasibility,
        }
    }
}

/// `∫ f² g(μ)` by the trapezoid rule.
pub fn evaluate_f<T: Real>(mu: &DensityMeasure<T>, f: &ScalarField<T>, g: &GFunction<T>) -> Result<T> {
    f.grid().check_compatible(mu.density.grid())?;
    let w = f.grid().weights();
    Ok(w.iter()
        .zip(f.values())
        .zip(mu.density.values())
        .map(|((&wi, &fi), &mi)| wi * fi * fi * g.eval(mi))
        .sum())
}

/// `{x : t ∈ −∂g(x)}`.
pub fn subdiff_inverse<T: Real>(g: &GFunction<T>, t: T) -> (T, T) {
    g.subdiff_inverse(t)
}

/// Feasibility of the limit problem for the cutoff of `g` on a domain of volume `volume`.
pub fn feasibility<T: Real>(g: &GFunction<T>, volume: T) -> Feasibility<T> {
    let t1 = g.t_alpha.map(|t| t * g.alpha);
    match t1 {
        None => Feasibility {
            covering: true,
            literal: true,
            t1,
        },
        Some(t1) => {
            let dd = T::from_usize_lossy(g.d);
            Feasibility {
                covering: unit_ball_volume::<T>(g.d) * g.alpha.powf(dd) < volume * t1.powf(dd),
                literal: g.alpha < volume * t1,
                t1: Some(t1),
            }
        }
    }
}

struct Selector<'a, T: Real> {
    g: &'a GFunction<T>,
    slopes: Vec<T>,
    f2: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Selector<'_, T> {
    fn density(&self, c: T) -> Vec<T> {
        self.f2
            .par_iter()
            .map(|&f2| {
                if f2 == T::zero() {
                    return T::zero();
                }
                let (lo, hi) = self.g.subdiff_inverse_with(&self.slopes, c / f2);
                (lo + hi) / T::lit(2.0)
            })
            .collect()
    }

    fn mass(&self, mu: &[T]) -> T {
        self.weights.iter().zip(mu).map(|(&w, &m)| w * m).sum()
    }
}

/// Total mass of the density selected by the multiplier `c`; nonincreasing in `c`.
pub fn mass_at<T: Real>(f: &ScalarField<T>, g: &GFunction<T>, c: T) -> T {
    let sel = selector(f, g);
    sel.mass(&sel.density(c))
}

fn selector<'a, T: Real>(f: &ScalarField<T>, g: &'a GFunction<T>) -> Selector<'a, T> {
    Selector {
        g,
        slopes: g.slopes(),
        f2: f.values().iter().map(|&v| v * v).collect(),
        weights: f.grid().weights(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitOptions {
    pub max_iterations: usize,
    /// Geometric bracket expansions before giving up.
    pub max_expansions: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            max_expansions: 60,
        }
    }
}

/// Minimizes `∫ f² g(μ)` over densities of unit mass by bisection on the
/// multiplier `c` in `μ(x) ∈ (−∂g)^{-1}(c/f²(x))`.
///
/// Flat pieces of the subdifferential are resolved at the end by blending
/// the selections on both sides of the final bracket, which puts one
/// constant density on each level set and hits unit mass.
pub fn solve_limit<T: Real>(f: &ScalarField<T>, g: &GFunction<T>) -> Result<LimitSolution<T>> {
    solve_limit_with(f, g, &LimitOptions::default())
}

pub fn solve_limit_with<T: Real>(
    f: &ScalarField<T>,
    g: &GFunction<T>,
    opts: &LimitOptions,
) -> Result<LimitSolution<T>> {
    if f.grid().dim() != g.d {
        return Err(Error::DomainMismatch(format!(
            "f is {}-dimensional, g is for d = {}",
            f.grid().dim(),
            g.d
        )));
    }
    if f.values().iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidInput("load must be nonnegative".into()));
    }
    let fmax = f.max_value();
    if !(fmax > T::zero()) {
        return Err(Error::InvalidInput("load vanishes identically".into()));
    }
    let volume = f.grid().domain().volume();
    let feas = feasibility(g, volume);
    if !feas.covering {
        return Err(Error::Infeasible(format!(
            "ω_d α^d >= |Ω| t₁^d (α = {}, t₁ = {:?}): the balls can cover the domain",
            g.alpha, feas.t1
        )));
    }

    let sel = selector(f, g);
    let one = T::one();
    let s0 = sel.slopes.first().map_or(T::zero(), |&v| -v);
    if s0 == T::zero() {
        return Err(Error::InvalidInput("g has no decreasing part".into()));
    }
    let mut c_hi = s0 * fmax * fmax * T::lit(2.0);
    let mut mu_hi = sel.density(c_hi);
    let mut m_hi = sel.mass(&mu_hi);
    if m_hi > one {
        return Err(Error::Infeasible(format!(
            "mass {m_hi} > 1 at the smallest admissible density x₀ = {}",
            g.x[0]
        )));
    }
    let mut c_lo = c_hi * T::lit(1e-3);
    let mut mu_lo = sel.density(c_lo);
    let mut m_lo = sel.mass(&mu_lo);
    let mut expansions = 0;
    while m_lo < one {
        expansions += 1;
        if expansions > opts.max_expansions || !(c_lo > T::min_positive_value()) {
            return Err(Error::Infeasible(format!(
                "mass stays below 1 (reached {m_lo}); the density cutoff cannot carry unit mass"
            )));
        }
        c_hi = c_lo;
        mu_hi = mu_lo;
        m_hi = m_lo;
        c_lo = c_lo * T::lit(1e-3);
        mu_lo = sel.density(c_lo);
        m_lo = sel.mass(&mu_lo);
    }

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let mid = (c_lo * c_hi).sqrt();
        if !(mid > c_lo && mid < c_hi) {
            break;
        }
        iterations += 1;
        let mu = sel.density(mid);
        let m = sel.mass(&mu);
        if m >= one {
            c_lo = mid;
            mu_lo = mu;
            m_lo = m;
        } else {
            c_hi = mid;
            mu_hi = mu;
            m_hi = m;
        }
        if m == one {
            c_hi = mid;
            mu_hi = mu_lo.clone();
            m_hi = m;
            break;
        }
    }
    let lambda = if m_lo > m_hi {
        (one - m_hi) / (m_lo - m_hi)
    } else {
        T::zero()
    };
    let values: Vec<T> = mu_hi.iter().zip(&mu_lo).map(|(&h, &l)| h + lambda * (l - h)).collect();
    let c = c_hi;
    let measure = DensityMeasure::new(ScalarField::new(f.grid().clone(), values)?)?;

    let mut inclusion = T::zero();
    for (&f2, &mu) in sel.f2.iter().zip(measure.density.values()) {
        if f2 == T::zero() {
            continue;
        }
        let t = c / f2;
        let (lo, hi) = g.neg_subdifferential_with(&sel.slopes, mu);
        let dist = if t < lo {
            lo - t
        } else if t > hi {
            t - hi
        } else {
            T::zero()
        };
        inclusion = inclusion.max(dist);
    }
    let objective = evaluate_f(&measure, f, g)?;
    Ok(LimitSolution {
        mass_error: (measure.mass - one).abs(),
        measure,
        c,
        objective,
        inclusion_residual: inclusion,
        iterations,
        feasibility: feas,
    })
}
