//! Pieces shared by the experiments: PDE settings, limit paths, distance
//! curves and seed-level aggregation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::Kernel;
use crate::particle::{F0Spec, Order, TrajectoryBundle};
use crate::pde::{
    evolve_kinetic_path, evolve_mckean_path, DiffusionScheme, FpOptions, GridDensity, GridSpec, KineticForce,
    PhaseGridDensity,
};
use crate::transport::{
    bootstrap_slope, empirical_measure, grid_to_measure, loglog_fit, mean, phase_grid_to_measure,
    subgaussian_norm_estimate, w1, w1_points_to_grid_1d, DiscreteMeasure,
};

fn default_half_width() -> f64 {
    8.0
}
fn default_cells() -> usize {
    2048
}
fn default_record() -> usize {
    8
}
fn default_v_half_width() -> f64 {
    6.0
}
fn default_v_cells() -> usize {
    96
}
fn default_budget() -> usize {
    4096
}
fn default_scheme() -> DiffusionScheme {
    DiffusionScheme::Implicit
}

/// Grid and output cadence of the deterministic limit solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSettings {
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Distances are compared every this many particle steps.
    #[serde(default = "default_record")]
    pub record_every: usize,
    #[serde(default = "default_scheme")]
    pub diffusion: DiffusionScheme,
    /// Velocity box of the kinetic solver.
    #[serde(default = "default_v_half_width")]
    pub v_half_width: f64,
    #[serde(default = "default_v_cells")]
    pub v_cells: usize,
    /// Atom budget when a grid law is turned into a discrete measure (d = 2
    /// and phase space). Set from the metric options of a run config.
    #[serde(skip, default = "default_budget")]
    pub atom_budget: usize,
}

impl Default for PdeSettings {
    fn default() -> Self {
        PdeSettings {
            half_width: default_half_width(),
            cells: default_cells(),
            record_every: default_record(),
            diffusion: default_scheme(),
            v_half_width: default_v_half_width(),
            v_cells: default_v_cells(),
            atom_budget: default_budget(),
        }
    }
}

impl PdeSettings {
    pub fn spec(&self, dim: usize) -> Result<GridSpec> {
        GridSpec::new(dim, self.half_width, self.cells)
    }

    pub fn options(&self) -> FpOptions {
        FpOptions { diffusion: self.diffusion, ..FpOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.record_every == 0 {
            return Err(LabError::Config("pde.record_every must be at least 1".into()));
        }
        if self.cells == 0 || self.v_cells == 0 {
            return Err(LabError::Config("pde.cells must be at least 1".into()));
        }
        if !(self.half_width > 0.0) || !(self.v_half_width > 0.0) {
            return Err(LabError::Config("pde half widths must be positive".into()));
        }
        Ok(())
    }
}

/// A deterministic limit law recorded at the compared times.
#[derive(Clone, Debug)]
pub enum LimitPath {
    Position(Vec<GridDensity>),
    Phase(Vec<PhaseGridDensity>),
}

impl LimitPath {
    pub fn len(&self) -> usize {
        match self {
            LimitPath::Position(p) => p.len(),
            LimitPath::Phase(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            LimitPath::Position(p) => p.iter().map(|g| g.time).collect(),
            LimitPath::Phase(p) => p.iter().map(|g| g.time).collect(),
        }
    }
}

/// Solves the mean-field equation from `f0` (kinetic for second order).
pub fn mean_field_path(
    kernel: &Kernel,
    f0: &F0Spec,
    v0: &F0Spec,
    order: Order,
    friction: f64,
    dt: f64,
    steps: usize,
    pde: &PdeSettings,
) -> Result<LimitPath> {
    let dim = kernel.dim();
    match order {
        Order::First => {
            let start = f0.to_grid(pde.spec(dim)?)?;
            Ok(LimitPath::Position(evolve_mckean_path(&start, kernel, dt, steps, pde.record_every, &pde.options())?))
        }
        Order::Second => {
            if dim != 1 {
                return Err(LabError::Unsupported("kinetic limit solves are one-dimensional".into()));
            }
            let start = phase_start(f0, v0, friction, pde)?;
            Ok(LimitPath::Phase(evolve_kinetic_path(
                &start,
                KineticForce::MeanField(kernel),
                dt,
                steps,
                pde.record_every,
                &pde.options(),
            )?))
        }
    }
}

pub fn phase_start(f0: &F0Spec, v0: &F0Spec, friction: f64, pde: &PdeSettings) -> Result<PhaseGridDensity> {
    let x = f0.to_grid(pde.spec(1)?)?;
    let v = v0.to_grid(GridSpec::new(1, pde.v_half_width, pde.v_cells)?)?;
    PhaseGridDensity::product(&x, &v, friction)
}

/// `W1` between the particles at the compared steps and the limit path.
///
/// One-dimensional positions use the exact point-to-cell formula; other
/// cases go through cell-centre atoms and the network simplex.
pub fn distance_curve(bundle: &TrajectoryBundle, path: &LimitPath, record_every: usize, budget: usize) -> Result<Vec<f64>> {
    let needed = (path.len() - 1) * record_every;
    if needed > bundle.steps() {
        return Err(LabError::Shape(format!(
            "limit path reaches step {needed} but the particles stop at {}",
            bundle.steps()
        )));
    }
    let times = path.times();
    let mut out = Vec::with_capacity(path.len());
    for (k, t) in times.iter().enumerate() {
        let s = k * record_every;
        if (bundle.times[s] - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(LabError::Shape(format!("particle time {} against limit time {t}", bundle.times[s])));
        }
        let d = match path {
            LimitPath::Position(p) if p[k].spec.dim == 1 && bundle.velocities.is_none() => {
                w1_points_to_grid_1d(&bundle.positions[s], &p[k])?
            }
            LimitPath::Position(p) => w1(&empirical_measure(bundle, s)?, &grid_to_measure(&p[k], budget)?)?,
            LimitPath::Phase(p) => w1(&empirical_measure(bundle, s)?, &phase_grid_to_measure(&p[k], budget)?)?,
        };
        out.push(d);
    }
    Ok(out)
}

/// The empirical measure at a step, positions only.
pub fn position_measure(bundle: &TrajectoryBundle, step: usize) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(bundle.dim, bundle.positions[step].clone())
}

/// Summary over seeds at one particle count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedSummary {
    pub particles: usize,
    pub completed: usize,
    pub failed: usize,
    pub mean: f64,
    /// Finite-`p` sub-Gaussian norm estimate; NaN with fewer than 16 seeds.
    pub subgaussian: f64,
    pub std_error: f64,
}

pub fn summarize(particles: usize, values: &[f64], failed: usize) -> SeedSummary {
    let m = if values.is_empty() { f64::NAN } else { mean(values) };
    let se = if values.len() > 1 {
        let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (values.len() - 1) as f64;
        (v / values.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    SeedSummary {
        particles,
        completed: values.len(),
        failed,
        mean: m,
        subgaussian: subgaussian_norm_estimate(values).unwrap_or(f64::NAN),
        std_error: se,
    }
}

/// Log-log fit of the per-`N` means with a seed-bootstrap interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    /// Means strictly decrease along the `N` grid.
    pub monotone: bool,
}

pub fn fit_decay(ns: &[usize], samples: &[Vec<f64>], resamples: usize, seed: u64) -> Result<DecayFit> {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let means: Vec<f64> = samples.iter().map(|s| if s.is_empty() { f64::NAN } else { mean(s) }).collect();
    let monotone = means.windows(2).all(|w| w[1] < w[0]);
    let (slope, intercept) = loglog_fit(&xs, &means).unwrap_or((f64::NAN, f64::NAN));
    let (slope_low, slope_high) = if resamples > 0 && samples.iter().all(|s| !s.is_empty()) {
        bootstrap_slope(&xs, samples, resamples, seed)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(DecayFit { slope, intercept, slope_low, slope_high, monotone })
}

/// Milliseconds since `start`.
pub fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Checks an `N` list: strictly increasing with at least `min` entries.
pub fn check_particle_counts(ns: &[usize], min: usize) -> Result<()> {
    if ns.len() < min {
        return Err(LabError::Config(format!("need at least {min} values of N, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) || ns.first() == Some(&0) {
        return Err(LabError::Config("the N list must be positive and strictly increasing".into()));
    }
    Ok(())
}

pub fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(LabError::Config("need at least one seed".into()));
    }
    Ok(())
}

/// `T / dt` as a whole number of steps.
pub fn whole_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(LabError::Config("need dt > 0 and T >= 0".into()));
    }
    let r = horizon / dt;
    let k = r.round();
    if (r - k).abs() > 1e-9 * r.max(1.0) {
        return Err(LabError::Config(format!("T/dt = {r} is not a whole number of steps")));
    }
    Ok(k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn particle_count_checks() {
        assert!(check_particle_counts(&[1, 2, 3, 4], 4).is_ok());
        assert!(check_particle_counts(&[1, 2, 3], 4).is_err());
        assert!(check_particle_counts(&[1, 2, 2, 4], 4).is_err());
    }

    #[test]
    fn summary_of_constant_sample() {
        let s = summarize(8, &[0.5; 20], 1);
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.std_error, 0.0);
        assert!((s.subgaussian - 0.5).abs() < 1e-12);
        assert!(summarize(8, &[0.5; 3], 0).subgaussian.is_nan());
    }

    #[test]
    fn decay_fit_on_exact_power_law() {
        let ns = [100, 200, 400, 800];
        let samples: Vec<Vec<f64>> = ns.iter().map(|&n| vec![(n as f64).powf(-0.5); 4]).collect();
        let f = fit_decay(&ns, &samples, 50, 1).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.monotone);
    }
}
