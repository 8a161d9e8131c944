//! Numerical tools for placing `n` small Dirichlet balls so as to minimize
//! the compliance of a Poisson problem, and for the `n → ∞` density limit.
//!
//! Everything is generic over the scalar type; the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balls;
pub mod error;
pub mod limit;
pub mod pde;
pub mod placement;
pub mod scalar;
pub mod theta;

pub use error::{Error, Result};
pub use scalar::{unit_ball_volume, Real};

pub type Domain = pde::Domain<f64>;
pub type Grid = pde::Grid<f64>;
pub type Field = pde::ScalarField<f64>;
pub type Config = balls::BallConfig<f64>;
