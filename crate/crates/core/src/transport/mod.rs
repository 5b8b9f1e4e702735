//! Wasserstein-1 and bounded-Lipschitz distances between discrete measures,
//! plus the estimators used to summarise them.

pub mod dbl;
pub mod measure;
pub mod simplex;
pub mod stats;
pub mod w1;

pub use dbl::{dbl, DBL_MAX_SUPPORT};
pub use measure::{empirical_measure, grid_to_measure, phase_grid_to_measure, DiscreteMeasure};
pub use simplex::{solve_transport, TransportPlan};
pub use stats::{
    bootstrap_slope, compensate, compensated_sup_statistic, loglog_fit, mean, ols, subgaussian_norm_estimate, CompensatedSup,
    Compensation,
};
pub use w1::{w1, w1_1d, w1_exact, w1_grids_1d, w1_points_to_grid_1d, TransportResult};
