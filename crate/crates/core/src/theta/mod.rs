//! The cell constant `θ(α)`: numerical estimates, closed-form bounds,
//! envelopes and the rescaled function `g_α`.

pub mod bounds;
pub mod diagnostics;
pub mod estimate;
pub mod gfunc;
pub mod table;

pub use bounds::{
    lower_bound, lower_bound_integrated, theta_derivative_bound, upper_bound_leading, upper_bound_neumann,
};
pub use diagnostics::{diagnostics, Diagnostics};
pub use estimate::{estimate_theta, estimate_theta_with, sweep_theta, EstimateOptions, HRule, SweepPoint};
pub use gfunc::{build_g, GFunction};
pub use table::{envelopes, isotonic_decreasing, t1_estimate, Envelope, Family, ThetaSample, ThetaTable};
