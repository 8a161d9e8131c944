use crate::balls::config::{admissible, BallConfig};
use crate::error::Result;
use crate::pde::field::ScalarField;
use crate::pde::flux::normal_flux;
use crate::pde::mask::rasterize;
use crate::pde::quadrature::compliance;
use crate::pde::solver::{solve_poisson, PoissonSolution, SolveOptions};
use crate::scalar::Real;

/// Solves the state equation for a configuration on the grid of `f`.
pub fn solve_config<T: Real>(
    config: &BallConfig<T>,
    f: &ScalarField<T>,
    opts: &SolveOptions<T>,
) -> Result<PoissonSolution<T>> {
    let mask = rasterize(config, f.grid())?;
    solve_poisson(&mask, f, opts)
}

/// `F(Σ, f, Ω) = ∫ f u`, with no admissibility check.
pub fn config_compliance<T: Real>(config: &BallConfig<T>, f: &ScalarField<T>, opts: &SolveOptions<T>) -> Result<T> {
    let sol = solve_config(config, f, opts)?;
    compliance(&sol.u, f)
}

/// `n^(2/d)·F` for admissible configurations, `+∞` otherwise.
pub fn scaled_compliance<T: Real>(config: &BallConfig<T>, f: &ScalarField<T>) -> Result<T> {
    scaled_compliance_with(config, f, &SolveOptions::default())
}

pub fn scaled_compliance_with<T: Real>(
    config: &BallConfig<T>,
    f: &ScalarField<T>,
    opts: &SolveOptions<T>,
) -> Result<T> {
    if !admissible(config).admissible {
        return Ok(T::infinity());
    }
    Ok(scale_factor::<T>(config.n(), config.dim()) * config_compliance(config, f, opts)?)
}

/// `n^(2/d)`.
pub fn scale_factor<T: Real>(n: usize, d: usize) -> T {
    T::from_usize_lossy(n).powf(T::lit(2.0) / T::from_usize_lossy(d))
}

/// Descent direction for moving each ball rigidly: `Σ |∂u/∂n|² ν w` over the
/// surface samples of that ball, the negative of `dF/dx_i`.
pub fn translation_gradient<T: Real>(config: &BallConfig<T>, u: &ScalarField<T>) -> Result<Vec<Vec<T>>> {
    translation_gradient_with(config, u, default_samples(config.dim()))
}

pub fn default_samples(d: usize) -> usize {
    match d {
        1 => 8,
        2 => 64,
        _ => 256,
    }
}

pub fn translation_gradient_with<T: Real>(
    config: &BallConfig<T>,
    u: &ScalarField<T>,
    samples_per_ball: usize,
) -> Result<Vec<Vec<T>>> {
    let fluxes = normal_flux(u, config, samples_per_ball)?;
    let d = config.dim();
    Ok(fluxes
        .iter()
        .map(|ball| {
            let mut g = vec![T::zero(); d];
            for s in ball {
                let w = s.flux * s.flux * s.weight;
                for (gi, &ni) in g.iter_mut().zip(&s.normal) {
                    *gi = *gi + w * ni;
                }
            }
            g
        })
        .collect())
}
