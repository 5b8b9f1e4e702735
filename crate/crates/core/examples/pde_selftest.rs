//! Solver sanity: heat-flow variance growth, mass conservation and
//! self-convergence under grid refinement.
//!
//! ```text
//! cargo run --release --example pde_selftest
//! ```

use chaoslab::experiments::{run_pde_selftest, SelftestSettings};

fn main() -> chaoslab::Result<()> {
    let r = run_pde_selftest(&SelftestSettings::default())?;
    println!("variance {:.6} -> {:.6}, relative error {:.2e}", r.initial_variance, r.final_variance, r.variance_error);
    println!("largest mass drift {:.2e} with dt = {}", r.mass_drift, r.dt);
    for (g, d) in r.refinement_cells.iter().zip(&r.refinement_distances) {
        println!("W1 between {g} and {} cells: {d:.3e}", 2 * g);
    }
    println!("contraction factor {:.2}", r.contraction);
    Ok(())
}
