//! Covering numbers of finite metric spaces, the two entropy lemmas, the
//! Lipschitz-ball net, and the exact rate exponents.
//!
//! ```text
//! cargo run --release --example covering_numbers
//! ```

use chaoslab::entropy::{
    covering_number_greedy, entropy_rows, gamma_first_order, gamma_second_order, lip1_scaling, minimum_cover,
    Exponent, FiniteMetricSpace, RegularityCase,
};
use chaoslab::experiments::{run_entropy_check, EntropySettings};

fn main() -> chaoslab::Result<()> {
    let pts: Vec<f64> = (0..10).map(|k| (k as f64 * 0.37).fract()).collect();
    let space = FiniteMetricSpace::from_points(&pts, 1)?;
    for eps in [0.3, 0.1] {
        let greedy = covering_number_greedy(&space, eps)?.count();
        let exact = minimum_cover(&space, eps)?.count();
        println!("eps {eps}: greedy {greedy}, minimum {exact}");
    }
    for row in entropy_rows(&space, 1, &[0.2, 0.05])? {
        println!("eps {}: grid-net bound {}", row.eps, row.bound_rhs);
    }

    let check = run_entropy_check(&EntropySettings::new(vec![0.4, 0.2, 0.1]))?;
    println!("lemma violations on random spaces: {}", check.violations);
    let lip = lip1_scaling(&[0.4, 0.2, 0.1], 8.0, 3.0)?;
    println!("Lipschitz-ball log-size exponent {:.3}", lip.exponent);

    let p4 = Exponent::from_f64(4.0)?;
    println!("first order, alpha 1/2, p 4: gamma = {}", gamma_first_order(RegularityCase::holder(0.5)?, p4, 1)?);
    println!("second order, alpha 3/4, p 4: gamma = {}", gamma_second_order(RegularityCase::holder(0.75)?, p4, 1)?);
    match gamma_second_order(RegularityCase::holder(0.66)?, p4, 1) {
        Ok(g) => println!("unexpected gamma {g}"),
        Err(e) => println!("alpha 0.66 rejected: {e}"),
    }
    Ok(())
}
