//! First- and second-order particle systems with a Hölder kernel, written
//! to CSV and binary trajectory files.
//!
//! ```text
//! cargo run --release --example particle_simulation -- [out_dir]
//! ```

use std::path::PathBuf;

use chaoslab::field::{HolderShape, Kernel};
use chaoslab::particle::dump::{write_trajectory_binary, write_trajectory_csv};
use chaoslab::particle::{simulate_interacting, NoiseStore, SimConfig};

fn main() -> chaoslab::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/example-particles".into()));
    let kernel = Kernel::holder_power(1, 0.5, HolderShape::Radial)?;

    let first = SimConfig::first_order(256, 1, 1.0, 1.0 / 256.0, 42);
    let noise = NoiseStore::generate(first.seed, first.particles, first.dim, first.steps()?, first.dt)?;
    let bundle = simulate_interacting(&first, &kernel, &noise)?;
    let last = bundle.steps();
    let mean = (0..bundle.particles).map(|i| bundle.position(i, last)[0]).sum::<f64>() / bundle.particles as f64;
    println!("first order: {} particles, {} steps, mean position at T = {mean:.4}", bundle.particles, last);
    write_trajectory_binary(&bundle, &out.join("first_order.bin"))?;

    let second = SimConfig::second_order(64, 1, 1.0, 1.0 / 256.0, 0.5, 42);
    let noise = NoiseStore::generate(second.seed, second.particles, second.dim, second.steps()?, second.dt)?;
    let bundle = simulate_interacting(&second, &kernel, &noise)?;
    let v = bundle.velocity(0, bundle.steps()).map(|v| v[0]).unwrap_or(f64::NAN);
    println!("second order: particle 0 ends with velocity {v:.4}");
    write_trajectory_csv(&bundle, &out.join("second_order.csv"))?;
    println!("trajectories written to {}", out.display());
    Ok(())
}
