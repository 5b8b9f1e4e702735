//! Uniform statistic over a finite net of Hölder fields: independent
//! particles driven by each field share noise and initial data.
//!
//! ```text
//! cargo run --release --example field_net_sup
//! ```

use chaoslab::experiments::{run_gc_experiment, GcSettings};
use chaoslab::field::{holder_net, HolderBallSpec};

fn main() -> chaoslab::Result<()> {
    let net = holder_net(&HolderBallSpec::new(1, 0.75, 1.0), 8)?;
    let settings = GcSettings::new(vec![64, 128, 256, 512], (0..8).collect());
    let report = run_gc_experiment(&net, &settings)?;
    for (k, s) in report.summaries.iter().enumerate() {
        let best_single = report.per_field_means.iter().map(|m| m[k]).fold(0.0f64, f64::max);
        println!("N = {:>4}: sup over net {:.5}, largest single field {:.5}", s.particles, s.mean, best_single);
    }
    println!("slope {:.3}, monotone {}, sup dominates every field {}", report.fit.slope, report.fit.monotone, report.dominance);
    Ok(())
}
