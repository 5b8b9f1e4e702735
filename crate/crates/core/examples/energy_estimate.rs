//! Weighted energy estimate comparing the laws driven by two different
//! fields with the time-integrated distance between the fields.
//!
//! ```text
//! cargo run --release --example energy_estimate
//! ```

use chaoslab::experiments::{run_energy_check, EnergySettings};

fn main() -> chaoslab::Result<()> {
    let r = run_energy_check(&EnergySettings::new(4))?;
    for row in &r.rows {
        println!(
            "pair ({}, {}): lhs(0) = {}, fitted constant {:.4}, violations {}",
            row.first, row.second, row.lhs_initial, row.fitted_c, row.violations
        );
    }
    Ok(())
}
