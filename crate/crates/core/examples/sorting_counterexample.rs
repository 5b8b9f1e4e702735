//! A drift that sorts red particles to the right keeps the uniform
//! statistic bounded away from zero for every N.
//!
//! ```text
//! cargo run --release --example sorting_counterexample
//! ```

use chaoslab::experiments::{run_counterexample, CounterexampleSettings};

fn main() -> chaoslab::Result<()> {
    let s = CounterexampleSettings::new(vec![16, 64, 256], (0..16).collect());
    let r = run_counterexample(&s)?;
    println!("{:>5} {:>10} {:>9} {:>9} {:>10} {:>10}", "N", "eps", "mean S_N", "zero S_N", "red shift", "push bound");
    for row in &r.rows {
        println!(
            "{:>5} {:>10.3e} {:>9.4} {:>9.4} {:>10.4} {:>10.4}",
            row.particles, row.eps, row.mean_s, row.ablation_mean, row.red_displacement, row.push_bound
        );
    }
    Ok(())
}
