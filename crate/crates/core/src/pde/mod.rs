//! Finite-volume solvers for the mean-field and frozen-drift equations.

pub mod energy;
pub mod fokker_planck;
pub mod grid;
pub mod kinetic;

pub use energy::{dual_exponent, verify_energy_estimate, weighted_norm, weighted_norm_values, EnergyReport, EnergyWeights};
pub use fokker_planck::{
    diffusion_dt_limit, evolve_linear_fp, evolve_linear_fp_path, evolve_mckean, evolve_mckean_path, DiffusionScheme,
    FpOptions,
};
pub use grid::{GridDensity, GridSpec, PhaseGridDensity};
pub use kinetic::{evolve_kinetic, evolve_kinetic_path, KineticForce};
