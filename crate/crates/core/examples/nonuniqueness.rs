//! Two mollification schedules of a non-Lipschitz drift, driven by the same
//! Brownian path, end at different points for alpha < 1.
//!
//! ```text
//! cargo run --release --example nonuniqueness
//! ```

use chaoslab::experiments::{run_nonuniqueness_demo, NonuniquenessSettings};

fn main() -> chaoslab::Result<()> {
    for alpha in [0.5, 1.0] {
        let r = run_nonuniqueness_demo(&NonuniquenessSettings::new(alpha, (0..10).collect()))?;
        for row in &r.rows {
            println!(
                "alpha {alpha}: n = {:>2}, mean gap {:.4}, fraction of seeds above {}: {:.2}",
                row.level, row.mean_gap, r.threshold, row.fraction_above
            );
        }
    }
    Ok(())
}
