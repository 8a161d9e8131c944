//! The finite-`n` placement problem: optimize centers for fixed `α`, `n`, `f`.

pub mod objective;
pub mod search;

pub use objective::{
    config_compliance, scale_factor, scaled_compliance, scaled_compliance_with, solve_config, translation_gradient,
    translation_gradient_with,
};
pub use search::{optimize, random_start, IterationRecord, Method, OptimizationTrace, OptimizerSettings};
