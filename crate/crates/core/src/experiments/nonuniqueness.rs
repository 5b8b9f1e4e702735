//! Two families of smooth approximations to the random field
//! `min(|x - B_t|^alpha, 1)` whose solutions from a point mass at the origin
//! need not agree in the limit.
//!
//! With `Y = X - B` the equation becomes the ODE `Y' = b^n_t(Y + B_t)`; both
//! schedules are integrated along the same Brownian path.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::experiments::harness::{check_seeds, whole_steps};
use crate::rng::stream_rng;
use crate::transport::mean;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `min((z^2 + n^{-4/alpha})^{alpha/2}, 1)`: strictly positive at 0.
    Plus,
    /// The plus schedule shifted down by its value at 0: vanishes at 0.
    Minus,
}

/// Profile of level `n` at displacement `z = x - B_t`.
pub fn mollified_profile(schedule: Schedule, alpha: f64, n: f64, z: f64) -> f64 {
    let delta = n.powf(-4.0 / alpha);
    let plus = |z: f64| (z * z + delta).powf(alpha / 2.0).min(1.0);
    match schedule {
        Schedule::Plus => plus(z),
        Schedule::Minus => plus(z) - plus(0.0),
    }
}

/// `y(t) = (t/2)^2` capped where it reaches 1: the non-zero solution of
/// `y' = min(|y|^{1/2}, 1)` from `y(0) = 0`.
pub fn capped_root_solution(t: f64) -> f64 {
    if t <= 2.0 {
        0.25 * t * t
    } else {
        1.0 + (t - 2.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonuniquenessSettings {
    pub experiment_id: String,
    pub alpha: f64,
    pub levels: Vec<u32>,
    pub seeds: Vec<u64>,
    pub horizon: f64,
    pub dt: f64,
    pub threshold: f64,
}

impl NonuniquenessSettings {
    pub fn new(alpha: f64, seeds: Vec<u64>) -> Self {
        NonuniquenessSettings {
            experiment_id: "nonuniqueness".into(),
            alpha,
            levels: vec![4, 8, 16],
            seeds,
            horizon: 2.0,
            dt: 1.0 / 1024.0,
            threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_seeds(&self.seeds)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LabError::Config(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(LabError::Config("mollification levels must be positive".into()));
        }
        whole_steps(self.horizon, self.dt)?;
        Ok(())
    }
}

fn brownian_path(seed: u64, steps: usize, dt: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut b = Vec::with_capacity(steps + 1);
    b.push(0.0);
    let sd = dt.sqrt();
    for k in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        b.push(b[k] + sd * z);
    }
    b
}

/// Classical RK4 for `Y' = profile(Y + B_t - B_t)` with `B` linear between
/// grid points; returns `Y_T`.
pub fn integrate_schedule(schedule: Schedule, alpha: f64, n: f64, path: &[f64], dt: f64) -> f64 {
    let field = |y: f64, b: f64| mollified_profile(schedule, alpha, n, (y + b) - b);
    let mut y = 0.0;
    for k in 0..path.len() - 1 {
        let (b0, b1) = (path[k], path[k + 1]);
        let bm = 0.5 * (b0 + b1);
        let k1 = field(y, b0);
        let k2 = field(y + 0.5 * dt * k1, bm);
        let k3 = field(y + 0.5 * dt * k2, bm);
        let k4 = field(y + dt * k3, b1);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonuniquenessCell {
    pub level: u32,
    pub seed: u64,
    pub plus_terminal: f64,
    pub minus_terminal: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonuniquenessRow {
    pub level: u32,
    pub mean_gap: f64,
    pub min_gap: f64,
    pub max_gap: f64,
    /// Fraction of seeds with gap at least the threshold.
    pub fraction_above: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonuniquenessReport {
    pub experiment_id: String,
    pub alpha: f64,
    pub threshold: f64,
    pub cells: Vec<NonuniquenessCell>,
    pub rows: Vec<NonuniquenessRow>,
}

pub fn run_nonuniqueness_demo(s: &NonuniquenessSettings) -> Result<NonuniquenessReport> {
    s.validate()?;
    let steps = whole_steps(s.horizon, s.dt)?;
    let grid: Vec<(u32, u64)> = s.levels.iter().flat_map(|&l| s.seeds.iter().map(move |&seed| (l, seed))).collect();
    let cells: Vec<NonuniquenessCell> = grid
        .par_iter()
        .map(|&(level, seed)| {
            let path = brownian_path(seed, steps, s.dt);
            let n = level as f64;
            let plus_terminal = integrate_schedule(Schedule::Plus, s.alpha, n, &path, s.dt);
            let minus_terminal = integrate_schedule(Schedule::Minus, s.alpha, n, &path, s.dt);
            NonuniquenessCell { level, seed, plus_terminal, minus_terminal, gap: (plus_terminal - minus_terminal).abs() }
        })
        .collect();
    let rows = s
        .levels
        .iter()
        .map(|&level| {
            let gaps: Vec<f64> = cells.iter().filter(|c| c.level == level).map(|c| c.gap).collect();
            NonuniquenessRow {
                level,
                mean_gap: mean(&gaps),
                min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
                max_gap: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                fraction_above: gaps.iter().filter(|g| **g >= s.threshold).count() as f64 / gaps.len() as f64,
            }
        })
        .collect();
    Ok(NonuniquenessReport { experiment_id: s.experiment_id.clone(), alpha: s.alpha, threshold: s.threshold, cells, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_textbook_solutions_satisfy_the_ode() {
        let f = |y: f64| y.abs().sqrt().min(1.0);
        for k in 1..400 {
            let t = k as f64 * 0.01;
            let h = 1e-6;
            let dy = (capped_root_solution(t + h) - capped_root_solution(t - h)) / (2.0 * h);
            assert!((dy - f(capped_root_solution(t))).abs() < 1e-6, "t = {t}");
        }
        // the zero solution trivially: f(0) = 0
        assert_eq!(f(0.0), 0.0);
    }

    #[test]
    fn schedules_converge_uniformly() {
        for n in [4.0, 16.0, 64.0] {
            for k in 0..200 {
                let z = -2.0 + 0.02 * k as f64;
                let target = z.abs().sqrt().min(1.0);
                for sch in [Schedule::Plus, Schedule::Minus] {
                    assert!((mollified_profile(sch, 0.5, n, z) - target).abs() <= 1.0 / (n * n) + 1e-15);
                }
            }
            assert_eq!(mollified_profile(Schedule::Minus, 0.5, n, 0.0), 0.0);
        }
    }

    #[test]
    fn lipschitz_control_gap_matches_sinh() {
        let s = NonuniquenessSettings { levels: vec![16], ..NonuniquenessSettings::new(1.0, vec![7]) };
        let r = run_nonuniqueness_demo(&s).unwrap();
        let expected = 2f64.sinh() / 256.0;
        assert!((r.cells[0].gap - expected).abs() < 1e-8, "{}", r.cells[0].gap);
        assert_eq!(r.cells[0].minus_terminal, 0.0);
    }

    #[test]
    fn root_field_separates() {
        let s = NonuniquenessSettings::new(0.5, vec![1, 2, 3]);
        let r = run_nonuniqueness_demo(&s).unwrap();
        for row in &r.rows {
            assert_eq!(row.fraction_above, 1.0, "{row:?}");
        }
    }
}
