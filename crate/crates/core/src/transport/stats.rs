use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::rng::stream_rng;
use crate::transport::measure::{empirical_measure, DiscreteMeasure};
use crate::transport::w1::w1;
use crate::particle::sim::TrajectoryBundle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// `sup_t d_t - c d_0`.
    Plain,
    /// `(sup_t d_t - c d_0)_+`, used for kinetic systems.
    PositivePart,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompensatedSup {
    pub value: f64,
    /// `d_MKW` at each compared time.
    pub distances: Vec<f64>,
}

impl CompensatedSup {
    pub fn initial(&self) -> f64 {
        self.distances[0]
    }
}

/// Compensated sup of already computed distances; `distances[0]` is the
/// initial one.
pub fn compensate(distances: Vec<f64>, c: f64, mode: Compensation) -> Result<CompensatedSup> {
    if distances.is_empty() {
        return Err(LabError::invalid("no times to compare"));
    }
    let sup = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut value = sup - c * distances[0];
    if mode == Compensation::PositivePart {
        value = value.max(0.0);
    }
    Ok(CompensatedSup { value, distances })
}

/// `sup_t W1(mu^N_t, f_t) - c W1(mu^N_0, f_0)` over the stored steps in
/// `steps`, with `limit[k]` the law at `bundle.times[steps[k]]`.
/// `limit_times` must match those times; `steps[0]` must be 0.
pub fn compensated_sup_statistic(
    bundle: &TrajectoryBundle,
    steps: &[usize],
    limit: &[DiscreteMeasure],
    limit_times: &[f64],
    c: f64,
    mode: Compensation,
) -> Result<CompensatedSup> {
    if steps.is_empty() || steps[0] != 0 {
        return Err(LabError::invalid("the compared steps must start at 0"));
    }
    if limit.len() != steps.len() || limit_times.len() != steps.len() {
        return Err(LabError::Shape(format!(
            "{} particle times against {} limit measures",
            steps.len(),
            limit.len()
        )));
    }
    let mut distances = Vec::with_capacity(steps.len());
    for (k, &s) in steps.iter().enumerate() {
        let t = *bundle
            .times
            .get(s)
            .ok_or_else(|| LabError::invalid(format!("step {s} is not stored")))?;
        if (t - limit_times[k]).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(LabError::Shape(format!("time grids differ: particle t={t}, limit t={}", limit_times[k])));
        }
        distances.push(w1(&empirical_measure(bundle, s)?, &limit[k])?);
    }
    compensate(distances, c, mode)
}

/// `max_p p^{-1/2} (mean |X|^p)^{1/p}` over `p in {1,2,4,8,16}`.
///
/// A finite-`p` estimate of the sub-Gaussian norm; it is biased low because the
/// supremum over all `p` is truncated.
pub fn subgaussian_norm_estimate(samples: &[f64]) -> Result<f64> {
    if samples.len() < 16 {
        return Err(LabError::invalid(format!("need at least 16 samples, got {}", samples.len())));
    }
    let n = samples.len() as f64;
    let top = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    // scale out the maximum so |x|^16 cannot overflow
    let mut best = 0.0f64;
    for p in [1.0f64, 2.0, 4.0, 8.0, 16.0] {
        let m = samples.iter().map(|x| (x.abs() / top).powf(p)).sum::<f64>() / n;
        best = best.max(top * m.powf(1.0 / p) / p.sqrt());
    }
    Ok(best)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(LabError::invalid("a fit needs two or more paired points"));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(LabError::invalid("all abscissae coincide"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// OLS on `(ln x, ln y)`; returns `(slope, intercept)`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(LabError::invalid("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

/// Percentile interval for the log-log slope, resampling seeds within each
/// `x`. `samples[k]` holds the per-seed values at `xs[k]`.
pub fn bootstrap_slope(xs: &[f64], samples: &[Vec<f64>], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = stream_rng(seed, 0);
    let mut slopes = Vec::with_capacity(resamples);
    let mut ys = vec![0.0; xs.len()];
    for _ in 0..resamples {
        for (k, s) in samples.iter().enumerate() {
            if s.is_empty() {
                return Err(LabError::invalid("empty sample"));
            }
            ys[k] = (0..s.len()).map(|_| s[rng.gen_range(0..s.len())]).sum::<f64>() / s.len() as f64;
        }
        if let Ok((b, _)) = loglog_fit(xs, &ys) {
            slopes.push(b);
        }
    }
    if slopes.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round()) as usize];
    Ok((q(0.025), q(0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_time_cancels() {
        let r = compensate(vec![0.37], 1.0, Compensation::Plain).unwrap();
        assert_eq!(r.value, 0.0);
        let r = compensate(vec![0.4, 0.1], 1.0, Compensation::Plain).unwrap();
        assert!(r.value >= 0.0);
        let r = compensate(vec![0.4, 0.1], 2.0, Compensation::PositivePart).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn subgaussian_constant_and_scaling() {
        let c = vec![2.5; 20];
        assert!((subgaussian_norm_estimate(&c).unwrap() - 2.5).abs() < 1e-12);
        assert!(subgaussian_norm_estimate(&c[..10]).is_err());
        let mut rng = stream_rng(4, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.abs()
        }).collect();
        let s = subgaussian_norm_estimate(&xs).unwrap();
        assert!((0.7..=1.1).contains(&s), "{s}");
        let scaled: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        assert!((subgaussian_norm_estimate(&scaled).unwrap() - 3.0 * s).abs() < 1e-9 * s);
    }

    #[test]
    fn exact_loglog_fit() {
        let (b, a) = loglog_fit(&[1.0, 10.0], &[1.0, 0.1]).unwrap();
        assert!((b + 1.0).abs() < 1e-12);
        assert!(a.abs() < 1e-12);
    }

    #[test]
    fn bootstrap_brackets_true_slope() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let samples: Vec<Vec<f64>> = xs
            .iter()
            .map(|x: &f64| (0..16).map(|k| x.powf(-0.5) * (1.0 + 0.01 * (k as f64 - 7.5))).collect())
            .collect();
        let (lo, hi) = bootstrap_slope(&xs, &samples, 200, 1).unwrap();
        assert!(lo <= -0.5 + 1e-3 && hi >= -0.5 - 1e-3, "{lo} {hi}");
    }
}
