//! W1 between discrete measures three ways, plus the bounded-Lipschitz
//! distance.
//!
//! ```text
//! cargo run --release --example transport_distances
//! ```

use chaoslab::transport::{dbl, w1, w1_1d, w1_exact, DiscreteMeasure};
use rand::Rng;

fn main() -> chaoslab::Result<()> {
    let mut rng = chaoslab::rng::stream_rng(7, 0);
    let a: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..15).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mu = DiscreteMeasure::uniform(1, a)?;
    let nu = DiscreteMeasure::uniform(1, b)?;

    let sweep = w1_1d(&mu, &nu)?;
    let simplex = w1_exact(&mu, &nu)?;
    println!("d = 1: CDF sweep {sweep:.12}, network simplex {:.12}", simplex.value);
    println!("       plan has {} positive entries ({})", simplex.plan.len(), simplex.method);
    println!("       d_BL = {:.6}", dbl(&mu, &nu)?);

    // In two dimensions only the simplex route applies.
    let p: Vec<f64> = (0..2 * 30).map(|_| rng.gen_range(0.0..1.0)).collect();
    let q: Vec<f64> = (0..2 * 30).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mu2 = DiscreteMeasure::uniform(2, p)?;
    let nu2 = DiscreteMeasure::uniform(2, q)?;
    println!("d = 2: W1 = {:.6}, d_BL = {:.6}", w1(&mu2, &nu2)?, dbl(&mu2, &nu2)?);
    Ok(())
}
