//! Tail probabilities of the Hölder norm of the empirical drift along the
//! particle trajectories.
//!
//! ```text
//! cargo run --release --example holder_regularity
//! ```

use chaoslab::experiments::{run_time_regularity, RegularitySettings};
use chaoslab::field::{HolderShape, Kernel};

fn main() -> chaoslab::Result<()> {
    let kernel = Kernel::holder_power(1, 0.5, HolderShape::Radial)?;
    let s = RegularitySettings::new(vec![64, 256, 1024], (0..8).collect());
    let r = run_time_regularity(&kernel, &s)?;
    println!("reference level A* = {:.4}", r.a_star);
    for row in &r.rows {
        println!("N = {:>5}: mean norm {:.4}, P(norm > A*) = {:.3}", row.particles, row.mean_norm, row.exceedance_star);
    }
    println!("exceedance decreasing in N at A*: {}", r.decreasing_at_star);
    Ok(())
}
