//! Particle systems: noise, initial data, time stepping and persistence.

pub mod dump;
pub mod initial;
pub mod noise;
pub mod sim;

pub use initial::{sample_initial, F0Spec};
pub use noise::NoiseStore;
pub use sim::{
    compensated_increment_stats, integrate, reference_trajectories, simulate_frozen, simulate_frozen_from,
    simulate_interacting, simulate_interacting_from, DriftRule, InitialState, Order, SimConfig, TrajectoryBundle,
};
