//! Covering numbers of finite spaces and function classes, and the rate
//! exponents they feed into.

pub mod gamma;
pub mod lip1;
pub mod space;

use serde::Serialize;

use crate::error::Result;

pub use gamma::{
    gamma_first_order, gamma_holder_first_order, gamma_second_order, rational, to_f64, Exponent, Rational, RegularityCase,
};
pub use lip1::{lip1_net, lip1_scaling, Lip1Net, Lip1Scaling};
pub use space::{
    best_cover, change_of_metric_check, covering_number_greedy, minimum_cover, product_entropy_check,
    ChangeOfMetricReport, Cover, FiniteMetricSpace, ProductEntropyReport, EXACT_COVER_LIMIT,
};

/// One row of an entropy report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyRow {
    pub eps: f64,
    pub count_greedy: usize,
    /// `NaN` when the space is too large for exhaustive search.
    pub count_exact_or_nan: f64,
    /// Size of the explicit grid net of the unit cube, `(floor(1/eps) + 1)^d`.
    pub bound_rhs: f64,
}

/// Greedy and (when feasible) exact covering numbers of `space`, assumed to
/// sit inside `[0, 1]^dim`, at each `eps`.
pub fn entropy_rows(space: &FiniteMetricSpace, dim: usize, eps_list: &[f64]) -> Result<Vec<EntropyRow>> {
    eps_list
        .iter()
        .map(|&eps| {
            let greedy = covering_number_greedy(space, eps)?.count();
            let exact = if space.len() <= EXACT_COVER_LIMIT {
                minimum_cover(space, eps)?.count() as f64
            } else {
                f64::NAN
            };
            Ok(EntropyRow {
                eps,
                count_greedy: greedy,
                count_exact_or_nan: exact,
                bound_rhs: ((1.0 / eps + 1e-9).floor() + 1.0).powi(dim as i32),
            })
        })
        .collect()
}
