//! Propagation-of-chaos rate: the compensated sup statistic of the
//! interacting system against the mean-field limit, across `N` and seeds.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{gamma_first_order, gamma_second_order, to_f64, Exponent, RegularityCase};
use crate::error::{LabError, Result};
use crate::experiments::harness::{
    check_particle_counts, check_seeds, distance_curve, elapsed_ms, fit_decay, mean_field_path, summarize,
    whole_steps, DecayFit, LimitPath, PdeSettings, SeedSummary,
};
use crate::field::Kernel;
use crate::particle::{simulate_interacting_from, F0Spec, InitialState, NoiseStore, Order, SimConfig};
use crate::transport::{compensate, mean, Compensation};

#[derive(Clone, Debug, PartialEq)]
pub struct RateSettings {
    pub experiment_id: String,
    pub particles: Vec<usize>,
    pub seeds: Vec<u64>,
    pub order: Order,
    pub dt: f64,
    pub horizon: f64,
    pub f0: F0Spec,
    pub v0: F0Spec,
    pub friction: f64,
    /// Compensation constant `c`.
    pub compensation: f64,
    /// Finite moment order of `f0` fed to the rate exponent.
    pub moment: f64,
    pub pde: PdeSettings,
    /// Re-run the smallest `N` at `dt / 2`.
    pub dt_sensitivity: bool,
    pub bootstrap: usize,
}

impl RateSettings {
    pub fn new(particles: Vec<usize>, seeds: Vec<u64>) -> Self {
        RateSettings {
            experiment_id: "chaos-rate".into(),
            particles,
            seeds,
            order: Order::First,
            dt: 1.0 / 512.0,
            horizon: 1.0,
            f0: F0Spec::default(),
            v0: F0Spec::default(),
            friction: 0.0,
            compensation: 1.0,
            moment: 4.0,
            pde: PdeSettings::default(),
            dt_sensitivity: true,
            bootstrap: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_particle_counts(&self.particles, 4)?;
        check_seeds(&self.seeds)?;
        whole_steps(self.horizon, self.dt)?;
        self.pde.validate()?;
        if whole_steps(self.horizon, self.dt)? % self.pde.record_every != 0 {
            return Err(LabError::Config("pde.record_every must divide the number of steps".into()));
        }
        if !(self.compensation >= 0.0) {
            return Err(LabError::Config("compensation constant must be non-negative".into()));
        }
        Ok(())
    }

    /// Number of particle sub-runs, including the sensitivity re-runs.
    pub fn sub_runs(&self) -> usize {
        self.particles.len() * self.seeds.len() + if self.dt_sensitivity { self.seeds.len() } else { 0 }
    }

    fn mode(&self) -> Compensation {
        match self.order {
            Order::First => Compensation::Plain,
            Order::Second => Compensation::PositivePart,
        }
    }
}

/// One `(N, seed)` sub-run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateCell {
    pub particles: usize,
    pub seed: u64,
    pub sup_stat: f64,
    pub w1_initial: f64,
    pub dt: f64,
    pub wallclock_ms: u64,
    /// `W1` at each compared time.
    #[serde(skip)]
    pub distances: Vec<f64>,
    pub error: Option<String>,
}

impl RateCell {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub gamma: f64,
    /// `C` calibrated at the smallest `N`.
    pub constant: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DtSensitivity {
    pub particles: usize,
    pub dt: f64,
    pub mean: f64,
    pub half_dt_mean: f64,
    pub relative_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub experiment_id: String,
    pub kernel: String,
    pub order: Order,
    pub times: Vec<f64>,
    pub cells: Vec<RateCell>,
    pub summaries: Vec<SeedSummary>,
    pub fit: DecayFit,
    pub gamma_theory: Option<f64>,
    /// Why no exponent is available, when it is not.
    pub gamma_note: Option<String>,
    pub envelope: Option<Envelope>,
    pub dt_sensitivity: Option<DtSensitivity>,
}

impl RateReport {
    pub fn means(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.mean).collect()
    }

    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| !c.ok()).count()
    }
}

/// Rate exponent of the theorem matching `order` and the kernel's declared
/// regularity.
pub fn theory_exponent(kernel: &Kernel, order: Order, moment: f64) -> Result<f64> {
    let case = match kernel.sobolev_data() {
        Some((s, q)) => RegularityCase::sobolev(s, q)?,
        None => RegularityCase::holder(kernel.holder_alpha())?,
    };
    let p = Exponent::from_f64(moment)?;
    let d = kernel.dim() as u32;
    let g = match order {
        Order::First => gamma_first_order(case, p, d)?,
        Order::Second => gamma_second_order(case, p, d)?,
    };
    Ok(to_f64(g))
}

fn sim_config(s: &RateSettings, dim: usize, particles: usize, seed: u64, dt: f64) -> SimConfig {
    let mut c = match s.order {
        Order::First => SimConfig::first_order(particles, dim, s.horizon, dt, seed),
        Order::Second => SimConfig::second_order(particles, dim, s.horizon, dt, s.friction, seed),
    };
    c.initial = s.f0.clone();
    c.initial_velocity = s.v0.clone();
    c
}

fn run_cell(s: &RateSettings, kernel: &Kernel, path: &LimitPath, particles: usize, seed: u64, dt: f64, record: usize) -> RateCell {
    let start = Instant::now();
    let result = (|| -> Result<(f64, f64, Vec<f64>)> {
        let config = sim_config(s, kernel.dim(), particles, seed, dt);
        let steps = config.steps()?;
        let noise = NoiseStore::generate(seed, particles, config.dim, steps, dt)?;
        let initial = InitialState::sample(&config)?;
        let bundle = simulate_interacting_from(&config, kernel, &noise, &initial)?;
        let distances = distance_curve(&bundle, path, record, s.pde.atom_budget)?;
        let stat = compensate(distances, s.compensation, s.mode())?;
        Ok((stat.value, stat.initial(), stat.distances))
    })();
    let wallclock_ms = elapsed_ms(start);
    match result {
        Ok((sup_stat, w1_initial, distances)) => {
            RateCell { particles, seed, sup_stat, w1_initial, dt, wallclock_ms, distances, error: None }
        }
        Err(e) => RateCell {
            particles,
            seed,
            sup_stat: f64::NAN,
            w1_initial: f64::NAN,
            dt,
            wallclock_ms,
            distances: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

fn limit(s: &RateSettings, kernel: &Kernel, dt: f64, record: usize) -> Result<LimitPath> {
    let steps = whole_steps(s.horizon, dt)?;
    let pde = PdeSettings { record_every: record, ..s.pde.clone() };
    mean_field_path(kernel, &s.f0, &s.v0, s.order, s.friction, dt, steps, &pde)
}

/// Runs every `(N, seed)` sub-run against one shared limit solve and fits
/// the decay of the per-`N` mean.
///
/// Failed sub-runs are kept in the report with their error and left out of
/// the aggregates.
pub fn run_chaos_rate(kernel: &Kernel, s: &RateSettings) -> Result<RateReport> {
    s.validate()?;
    let path = limit(s, kernel, s.dt, s.pde.record_every)?;
    let grid: Vec<(usize, u64)> =
        s.particles.iter().flat_map(|&n| s.seeds.iter().map(move |&seed| (n, seed))).collect();
    let cells: Vec<RateCell> = grid
        .par_iter()
        .map(|&(n, seed)| run_cell(s, kernel, &path, n, seed, s.dt, s.pde.record_every))
        .collect();

    let samples: Vec<Vec<f64>> = s
        .particles
        .iter()
        .map(|&n| cells.iter().filter(|c| c.particles == n && c.ok()).map(|c| c.sup_stat).collect())
        .collect();
    let summaries: Vec<SeedSummary> = s
        .particles
        .iter()
        .zip(&samples)
        .map(|(&n, v)| summarize(n, v, s.seeds.len() - v.len()))
        .collect();
    let fit = fit_decay(&s.particles, &samples, s.bootstrap, s.seeds[0])?;

    let (gamma_theory, gamma_note) = match theory_exponent(kernel, s.order, s.moment) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let envelope = gamma_theory.and_then(|gamma| {
        let m0 = summaries[0].mean;
        if !(m0 > 0.0) {
            return None;
        }
        let n0 = s.particles[0] as f64;
        let constant = m0 * n0.powf(gamma);
        let holds = summaries
            .iter()
            .all(|r| r.mean <= constant * (r.particles as f64).powf(-gamma) * (1.0 + 1e-12));
        Some(Envelope { gamma, constant, holds })
    });

    let dt_sensitivity = if s.dt_sensitivity {
        let n = s.particles[0];
        let half = s.dt / 2.0;
        let fine = limit(s, kernel, half, 2 * s.pde.record_every)?;
        let v: Vec<f64> = s
            .seeds
            .par_iter()
            .map(|&seed| run_cell(s, kernel, &fine, n, seed, half, 2 * s.pde.record_every))
            .filter(|c| c.ok())
            .map(|c| c.sup_stat)
            .collect::<Vec<_>>();
        let coarse = summaries[0].mean;
        let fine_mean = if v.is_empty() { f64::NAN } else { mean(&v) };
        Some(DtSensitivity {
            particles: n,
            dt: s.dt,
            mean: coarse,
            half_dt_mean: fine_mean,
            relative_change: (fine_mean - coarse).abs() / coarse.abs(),
        })
    } else {
        None
    };

    Ok(RateReport {
        experiment_id: s.experiment_id.clone(),
        kernel: kernel.descriptor(),
        order: s.order,
        times: path.times(),
        cells,
        summaries,
        fit,
        gamma_theory,
        gamma_note,
        envelope,
        dt_sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seeds: usize) -> RateSettings {
        let mut s = RateSettings::new(vec![16, 32, 64, 128], (0..seeds as u64).collect());
        s.dt = 1.0 / 64.0;
        s.horizon = 0.25;
        s.pde.cells = 256;
        s.pde.record_every = 2;
        s.dt_sensitivity = false;
        s.bootstrap = 20;
        s
    }

    #[test]
    fn zero_kernel_statistic_decreases_in_n() {
        let k = Kernel::zero(1).unwrap();
        let r = run_chaos_rate(&k, &small(16)).unwrap();
        assert_eq!(r.failed(), 0);
        assert!(r.cells.iter().all(|c| c.sup_stat >= 0.0));
        let m = r.means();
        assert!(m[3] < m[0], "{m:?}");
    }

    #[test]
    fn single_seed_single_particle_is_deterministic() {
        let k = Kernel::sine(1).unwrap();
        let mut s = small(1);
        s.particles = vec![1, 2, 3, 4];
        let a = run_chaos_rate(&k, &s).unwrap();
        let b = run_chaos_rate(&k, &s).unwrap();
        assert!(a.cells[0].sup_stat.is_finite());
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.sup_stat.to_bits(), y.sup_stat.to_bits());
        }
    }

    #[test]
    fn rejects_short_particle_lists() {
        let k = Kernel::zero(1).unwrap();
        let mut s = small(2);
        s.particles = vec![8, 16, 32];
        assert!(matches!(run_chaos_rate(&k, &s), Err(LabError::Config(_))));
    }

    #[test]
    fn envelope_uses_first_order_exponent() {
        let k = Kernel::holder_power(1, 0.5, crate::field::HolderShape::Radial).unwrap();
        let g = theory_exponent(&k, Order::First, 4.0).unwrap();
        assert!((g - 1.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn failed_cells_are_reported_not_fatal() {
        let k = Kernel::zero(2).unwrap();
        let mut s = small(2);
        s.pde.cells = 8;
        s.pde.atom_budget = 1;
        let r = run_chaos_rate(&k, &s).unwrap();
        assert_eq!(r.failed(), r.cells.len());
        assert!(r.cells[0].error.as_deref().unwrap().contains("atom budget"));
        assert!(r.means().iter().all(|m| m.is_nan()));
    }
}
