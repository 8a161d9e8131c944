use crate::error::Result;
use crate::pde::field::ScalarField;
use crate::pde::mask::ObstacleMask;
use crate::pde::solver::Operator;
use crate::scalar::Real;

/// Compliance `∫ f u`, trapezoid weights summed in node order.
pub fn compliance<T: Real>(u: &ScalarField<T>, f: &ScalarField<T>) -> Result<T> {
    u.grid().check_compatible(f.grid())?;
    let w = u.grid().weights();
    Ok(w.iter()
        .zip(u.values().iter().zip(f.values()))
        .fold(T::zero(), |acc, (&wi, (&ui, &fi))| acc + wi * fi * ui))
}

/// Dirichlet energy `∫ |∇u|²` from forward differences along every grid edge.
///
/// Edge weights are the transverse trapezoid weights, so for a solved system
/// the value equals [`compliance`] up to the solver residual.
pub fn dirichlet_energy<T: Real>(u: &ScalarField<T>, mask: &ObstacleMask) -> Result<T> {
    mask.check_grid(u.grid())?;
    let op = Operator::new(u.grid(), mask);
    Ok(op.energy(u.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::domain::Domain;
    use crate::pde::grid::Grid;
    use crate::pde::solver::{solve_poisson, SolveOptions};

    #[test]
    fn zero_fields() {
        let grid = Grid::new(Domain::<f64>::unit_cube(2).unwrap(), &[8, 8]).unwrap();
        let z = ScalarField::zeros(grid.clone());
        let one = ScalarField::constant(grid.clone(), 1.0);
        assert_eq!(compliance(&z, &one).unwrap(), 0.0);
        assert_eq!(dirichlet_energy(&z, &ObstacleMask::empty(&grid)).unwrap(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Grid::new(Domain::<f64>::unit_cube(1).unwrap(), &[8]).unwrap();
        let b = Grid::new(Domain::<f64>::unit_cube(1).unwrap(), &[16]).unwrap();
        let u = ScalarField::zeros(a);
        let f = ScalarField::zeros(b);
        assert!(compliance(&u, &f).is_err());
    }

    #[test]
    fn one_dimensional_compliance_and_energy() {
        let grid = Grid::with_spacing(Domain::<f64>::unit_cube(1).unwrap(), 1e-3).unwrap();
        let mask = ObstacleMask::empty(&grid);
        let f = ScalarField::constant(grid, 1.0);
        let sol = solve_poisson(&mask, &f, &SolveOptions::default()).unwrap();
        let c = compliance(&sol.u, &f).unwrap();
        let e = dirichlet_energy(&sol.u, &mask).unwrap();
        assert!((c - 1.0 / 12.0).abs() / (1.0 / 12.0) < 2e-3);
        assert!((e - 1.0 / 12.0).abs() / (1.0 / 12.0) < 5e-3);
    }
}
