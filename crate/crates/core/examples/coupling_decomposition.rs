//! The two triangle routes from the particles to the mean-field limit:
//! through the law of the frozen empirical field, and through independent
//! particles driven by the limit field.
//!
//! ```text
//! cargo run --release --example coupling_decomposition
//! ```

use chaoslab::experiments::{run_coupling_decomposition, CouplingSettings};
use chaoslab::field::Kernel;

fn main() -> chaoslab::Result<()> {
    let mut s = CouplingSettings::new(256, 11);
    s.pde.cells = 1024;
    let d = run_coupling_decomposition(&Kernel::sine(1)?, &s)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "W(mu,f)", "W(mu,fb)", "W(fb,f)", "W(mu,Y)", "W(Y,f)");
    for k in (0..d.times.len()).step_by(64) {
        println!(
            "{:>6.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            d.times[k],
            d.particles_to_limit[k],
            d.particles_to_frozen_law[k],
            d.frozen_law_to_limit[k],
            d.particles_to_independent[k],
            d.independent_to_limit[k]
        );
    }
    println!(
        "frozen route holds {}, independent route holds {}, worst slack {:.2e}",
        d.frozen_route_holds, d.independent_route_holds, d.worst_slack
    );
    let zero = run_coupling_decomposition(&Kernel::zero(1)?, &s)?;
    let gap = zero.particles_to_independent.iter().fold(0.0f64, |m, v| m.max(*v));
    println!("zero kernel: particles vs independent copies differ by at most {gap}");
    Ok(())
}
