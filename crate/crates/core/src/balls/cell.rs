use crate::balls::config::BallConfig;
use crate::balls::generators::is_boundary_covering;
use crate::error::{Error, Result};
use crate::pde::field::ScalarField;
use crate::pde::grid::Grid;
use crate::pde::mask::rasterize;
use crate::pde::solver::{solve_poisson, SolveOptions};
use crate::scalar::Real;

/// Boundary sampling density used to verify the covering hypothesis.
fn cover_samples<T: Real>(r: T) -> usize {
    let per_r = (T::lit(8.0) / r.max(T::lit(1e-6))).ceil().to_usize().unwrap_or(64);
    per_r.clamp(64, 20_000)
}

/// `∫_{I^d} u` where `−Δu = 1` off the balls of a boundary-covering base.
pub fn cell_constant<T: Real>(base: &BallConfig<T>, h: T) -> Result<T> {
    if !base.domain().is_unit_cube() {
        return Err(Error::InvalidInput("cell constant is defined on the unit cube".into()));
    }
    if !is_boundary_covering(base, cover_samples(base.radius())) {
        return Err(Error::InvalidInput(
            "base configuration does not cover the cube boundary".into(),
        ));
    }
    let grid = Grid::with_spacing(base.domain().clone(), h)?;
    let mask = rasterize(base, &grid)?;
    let f = ScalarField::constant(grid, T::one());
    let sol = solve_poisson(&mask, &f, &SolveOptions::default())?;
    Ok(sol.u.integral().max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::domain::Domain;

    #[test]
    fn fully_covered_cube_is_zero() {
        let base = BallConfig::new(Domain::<f64>::unit_cube(2).unwrap(), 0.75, vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(cell_constant(&base, 1.0 / 32.0).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_endpoint_intervals() {
        let base =
            BallConfig::from_radius(Domain::<f64>::unit_cube(1).unwrap(), 0.1, vec![vec![0.0], vec![1.0]]).unwrap();
        let c = cell_constant(&base, 1e-3).unwrap();
        let exact = 0.8f64.powi(3) / 12.0;
        assert!((c - exact).abs() / exact < 0.01, "{c} vs {exact}");
    }

    #[test]
    fn rejects_uncovered_boundary() {
        let base = BallConfig::new(Domain::<f64>::unit_cube(2).unwrap(), 0.2, vec![vec![0.5, 0.5]]).unwrap();
        assert!(matches!(cell_constant(&base, 1.0 / 64.0), Err(Error::InvalidInput(_))));
    }
}
