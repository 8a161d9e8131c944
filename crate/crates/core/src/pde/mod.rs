//! Uniform-grid finite differences on boxes with ball-shaped Dirichlet obstacles.

pub mod domain;
pub mod field;
pub mod flux;
pub mod grid;
pub mod io;
pub mod mask;
pub mod quadrature;
pub mod solver;

pub use domain::{Domain, OuterBoundary};
pub use field::ScalarField;
pub use flux::{normal_flux, FluxSample};
pub use grid::Grid;
pub use mask::{rasterize, ObstacleMask};
pub use quadrature::{compliance, dirichlet_energy};
pub use solver::{solve_poisson, LinearSolver, PoissonSolution, SolveOptions};
