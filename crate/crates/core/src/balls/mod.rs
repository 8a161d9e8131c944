pub mod cell;
pub mod config;
pub mod generators;
pub mod measure;

pub use cell::cell_constant;
pub use config::{admissible, inverse_root, project, Admissibility, BallConfig, BallConfigFile};
pub use generators::{boundary_cover, homogenize, is_boundary_covering, lattice_config};
pub use measure::{empirical_measure, histogram, histogram_l1, wasserstein1_1d, EmpiricalMeasure, Histogram};
