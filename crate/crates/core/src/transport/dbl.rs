//! Bounded-Lipschitz distance.
//!
//! `sup { int h d(mu - nu) : |h| <= 1, Lip(h) <= 1 }` equals the optimal
//! transport cost of the positive part of `mu - nu` onto its negative part for
//! the truncated cost `min(|z - z'|, 2)`: an `h` with `|h| <= 1` and
//! `Lip(h) <= 1` is exactly (up to an additive constant, which integrates to
//! zero against `mu - nu`) a 1-Lipschitz function for that truncated metric.

use crate::error::{LabError, Result};
use crate::transport::measure::DiscreteMeasure;
use crate::transport::simplex::solve_transport;

/// Combined support size above which [`dbl`] refuses to run.
pub const DBL_MAX_SUPPORT: usize = 2000;

pub fn dbl(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim != nu.dim {
        return Err(LabError::invalid("measures live in different dimensions"));
    }
    if mu.len() + nu.len() > DBL_MAX_SUPPORT {
        return Err(LabError::TooLarge(format!(
            "combined support {} exceeds {DBL_MAX_SUPPORT}",
            mu.len() + nu.len()
        )));
    }
    // Net signed mass on the merged support.
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::new();
    for (m, sign) in [(mu, 1.0), (nu, -1.0)] {
        for i in 0..m.len() {
            pts.push((m.atom(i).to_vec(), sign * m.weights[i]));
        }
    }
    pts.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
    for (p, w) in pts {
        match merged.last_mut() {
            Some(last) if last.0 == p => last.1 += w,
            _ => merged.push((p, w)),
        }
    }
    let tiny = 1e-15;
    let pos: Vec<&(Vec<f64>, f64)> = merged.iter().filter(|p| p.1 > tiny).collect();
    let neg: Vec<&(Vec<f64>, f64)> = merged.iter().filter(|p| p.1 < -tiny).collect();
    if pos.is_empty() || neg.is_empty() {
        return Ok(0.0);
    }
    let a: Vec<f64> = pos.iter().map(|p| p.1).collect();
    let b: Vec<f64> = neg.iter().map(|p| -p.1).collect();
    let cost = |i: usize, j: usize| {
        let r = pos[i].0.iter().zip(&neg[j].0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        r.min(2.0)
    };
    Ok(solve_transport(&a, &b, &cost)?.cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturates_at_two() {
        let a = DiscreteMeasure::dirac(&[0.0]);
        assert!((dbl(&a, &DiscreteMeasure::dirac(&[50.0])).unwrap() - 2.0).abs() < 1e-15);
        assert!((dbl(&a, &DiscreteMeasure::dirac(&[0.5])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(dbl(&a, &a).unwrap(), 0.0);
    }
}
