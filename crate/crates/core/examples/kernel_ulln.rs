//! Uniform law of large numbers for kernel-weighted averages over a field
//! net, against a large reference ensemble.
//!
//! ```text
//! cargo run --release --example kernel_ulln
//! ```

use chaoslab::experiments::{run_ulln_for_kernel, UllnSettings};
use chaoslab::field::{holder_net, HolderBallSpec, Kernel};

fn main() -> chaoslab::Result<()> {
    let net = holder_net(&HolderBallSpec::new(1, 0.75, 1.0), 4)?;
    let mut s = UllnSettings::new(vec![64, 128, 256, 512], (0..6).collect());
    s.reference_particles = 4096;
    let r = run_ulln_for_kernel(&Kernel::sine(1)?, &net, &s)?;
    for m in &r.summaries {
        println!("N = {:>4}: mean sup {:.5}", m.particles, m.mean);
    }
    println!("fitted slope {:.3}", r.fit.slope);
    Ok(())
}
